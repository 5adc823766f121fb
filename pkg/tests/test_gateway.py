"""Dissemination gateway: submissions, receipts, politeness, accounting."""

import time

import pytest

import helpers
from mementofix.errors import SubmissionFailed
from mementofix.gateway import (
    ArchiveEndpoint,
    Gateway,
    failures,
    resource_accounting,
    successes,
)
from mementofix.memento import parse_urim


def test_for_mock_templates():
    ep = ArchiveEndpoint.for_mock("http://127.0.0.1:7777")
    assert ep.save_uri("http://x.example/p") == (
        "http://127.0.0.1:7777/save?uri=http://x.example/p")
    assert ep.timemap_uri("http://x.example/p") == (
        "http://127.0.0.1:7777/web/timemap/link/http://x.example/p")


def test_disseminate_collects_receipts(archive_factory, mock_archive):
    ep1 = archive_factory()
    ep2 = archive_factory()
    page = helpers.seed_page(mock_archive, "/g/page", "gateway test")
    helpers.capture(mock_archive, page)

    gateway = Gateway([ArchiveEndpoint.for_mock(ep1.base),
                       ArchiveEndpoint.for_mock(ep2.base)], delay=0)
    results = gateway.disseminate(page)
    good = successes(results)
    assert len(good) == 2 and not failures(results)
    assert [r.endpoint for r in good] == [ep1.base, ep2.base]
    for receipt in good:
        assert receipt.submitted_uri == page
        assert parse_urim(receipt.resulting_urim).original == page
        assert receipt.elapsed >= 0
        assert receipt.resources_created >= 1
    assert gateway.success_count == 2


def test_dead_endpoint_reports_failure(mock_archive):
    page = helpers.seed_page(mock_archive, "/g/dead", "x")
    gateway = Gateway([ArchiveEndpoint.for_mock(mock_archive.base),
                       ArchiveEndpoint.for_mock("http://127.0.0.1:1")],
                      delay=0, timeout=5)
    results = gateway.disseminate(page)
    assert len(successes(results)) == 1
    bad = failures(results)
    assert len(bad) == 1
    assert isinstance(bad[0], SubmissionFailed)
    assert gateway.success_count == 1


def test_unsavable_uri_reports_failure(mock_archive):
    gateway = Gateway([ArchiveEndpoint.for_mock(mock_archive.base)], delay=0)
    results = gateway.disseminate(f"{mock_archive.base}/g/never-seeded")
    assert not successes(results)
    assert len(failures(results)) == 1


def test_politeness_delay_spaces_submissions(mock_archive):
    page = helpers.seed_page(mock_archive, "/g/slow", "x")
    gateway = Gateway([ArchiveEndpoint.for_mock(mock_archive.base)], delay=0.3)
    started = time.monotonic()
    gateway.disseminate(page)
    gateway.disseminate(page)
    elapsed = time.monotonic() - started
    assert elapsed >= 0.3


def test_per_endpoint_counters(archive_factory, mock_archive):
    ep = archive_factory()
    page = helpers.seed_page(mock_archive, "/g/counted", "x")
    gateway = Gateway([ArchiveEndpoint.for_mock(ep.base, name="mirror")], delay=0)
    gateway.disseminate(page)
    gateway.disseminate(page)
    assert gateway.success_count == 2
    assert len(gateway.per_endpoint["mirror"]) == 2


def test_resource_accounting_closed_form():
    assert resource_accounting(100, 2, 20) == (200, 10)
    assert resource_accounting(1000, 4, 100) == (4000, 40)
    assert resource_accounting(1000, 2, 100) == (2000, 20)
    assert resource_accounting(101, 2, 20) == (202, 12)   # partial block
    assert resource_accounting(1, 1, 100) == (1, 1)
    with pytest.raises(ValueError):
        resource_accounting(10, 2, 0)
