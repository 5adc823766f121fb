"""Fixtures that run the mock archive and publication server on OS-assigned ports."""

import pytest

from mementofix.mockarchive import MockArchive
from mementofix.server import FixityServer


@pytest.fixture
def archive_factory():
    started = []

    def make(**kwargs):
        archive = MockArchive(**kwargs).start()
        started.append(archive)
        return archive

    yield make
    for archive in started:
        archive.stop()


@pytest.fixture
def mock_archive(archive_factory):
    return archive_factory()


@pytest.fixture
def server_factory(tmp_path):
    started = []
    sequence = [0]

    def make(storage_dir=None, **kwargs):
        if storage_dir is None:
            sequence[0] += 1
            storage_dir = tmp_path / f"fixity-{sequence[0]}"
        server = FixityServer(str(storage_dir), **kwargs).start()
        started.append(server)
        return server

    yield make
    for server in started:
        server.stop()


@pytest.fixture
def fixity_server(server_factory):
    return server_factory()
