"""Fetch client: redirects as hops, logical fetch accounting, errors."""

import socket
import threading

import pytest

import helpers
from mementofix.errors import HttpError, Timeout
from mementofix.httpclient import FetchClient


def test_fetch_counts_one_per_call_including_hops(mock_archive):
    uri = helpers.seed_page(mock_archive, "/h/one", "payload")
    helpers.capture(mock_archive, uri)
    client = FetchClient()
    result = client.fetch(f"{mock_archive.base}/web/{uri}")
    assert result.ok
    assert result.body == b"payload"
    assert len(result.hops) == 1            # the TimeGate 302
    assert result.hops[0].status == 302
    assert client.fetch_count == 1
    assert client.request_count == 2

    client.fetch(result.url)
    assert client.fetch_count == 2
    client.reset_counts()
    assert client.fetch_count == 0 and client.request_count == 0


def test_fetch_without_following_redirects(mock_archive):
    uri = helpers.seed_page(mock_archive, "/h/two", "x")
    urim = helpers.capture(mock_archive, uri)
    client = FetchClient()
    result = client.fetch(f"{mock_archive.base}/web/{uri}",
                          follow_redirects=False)
    assert result.status == 302
    assert result.headers["Location"] == urim


def test_require_ok_raises(mock_archive):
    client = FetchClient()
    with pytest.raises(HttpError) as err:
        client.fetch(f"{mock_archive.base}/web/19960101000000/http://no.example/",
                     require_ok=True)
    assert err.value.status == 404
    assert client.fetch_count == 1          # failed fetches still count


def test_redirect_limit(mock_archive):
    helpers.seed_page(mock_archive, "/h/loop", "", status=302, location="/h/loop")
    uri = f"{mock_archive.base}/h/loop"
    with pytest.raises(HttpError):
        FetchClient().fetch(uri, max_redirects=3)


def test_read_timeout():
    silent = socket.socket()
    silent.bind(("127.0.0.1", 0))
    silent.listen(1)
    port = silent.getsockname()[1]
    try:
        with pytest.raises(Timeout):
            FetchClient(timeout=0.3).fetch(f"http://127.0.0.1:{port}/never")
    finally:
        silent.close()


def test_connection_refused_is_http_error():
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    free_port = probe.getsockname()[1]
    probe.close()
    with pytest.raises(HttpError):
        FetchClient(timeout=2).fetch(f"http://127.0.0.1:{free_port}/x")


def test_counters_are_thread_safe(mock_archive):
    uri = helpers.seed_page(mock_archive, "/h/many", "x")
    client = FetchClient()
    threads = [threading.Thread(target=client.fetch,
                                args=(f"{mock_archive.base}{'/h/many'}",))
               for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert client.fetch_count == 8
    assert uri.endswith("/h/many")
