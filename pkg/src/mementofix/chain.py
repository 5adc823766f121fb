"""Access to a block chain over HTTP or from a local directory.

A chain source answers two questions: what is the tip, and what are
the bytes behind a given ref. Blocks are immutable, so every fetched
block is cached for the lifetime of the source; batch verification
pays for the chain walk once.
"""

import logging
import threading

from .blocks import BlockStore
from .errors import BrokenChain, HttpError
from .httpclient import FetchClient

logger = logging.getLogger(__name__)


class DirectoryChainSource:
    """Chain stored as block files in a local directory."""

    def __init__(self, directory):
        self.store = BlockStore(directory)

    def tip(self) -> str | None:
        return self.store.tip()

    def fetch(self, ref: str) -> bytes:
        return self.store.fetch(ref)


class HttpChainSource:
    """Chain served behind a well-known entry URL that 302s to the tip."""

    def __init__(self, entry_url: str, client: FetchClient | None = None):
        self.entry_url = entry_url.rstrip("/")
        self.client = client or FetchClient()
        self._lock = threading.Lock()
        self._cache = {}
        self._tip = None
        self._tip_known = False

    def tip(self) -> str | None:
        with self._lock:
            if self._tip_known:
                return self._tip
        result = self.client.fetch(self.entry_url)
        if result.status == 404:
            with self._lock:
                self._tip, self._tip_known = None, True
            return None
        if not result.ok:
            raise HttpError(result.status, self.entry_url)
        ref = result.url.rstrip("/").rsplit("/", 1)[-1]
        with self._lock:
            self._cache[ref] = result.body
            self._tip, self._tip_known = ref, True
        logger.debug("chain tip at %s is %s", self.entry_url, ref[:12])
        return ref

    def fetch(self, ref: str) -> bytes:
        with self._lock:
            cached = self._cache.get(ref)
        if cached is not None:
            return cached
        try:
            result = self.client.fetch(f"{self.entry_url}/{ref}", require_ok=True)
        except HttpError as exc:
            raise BrokenChain(ref, f"cannot fetch block {ref}: {exc}") from exc
        with self._lock:
            self._cache[ref] = result.body
        return result.body


def open_chain_source(location: str, client: FetchClient | None = None):
    """Location is either a /blocks entry URL or a local directory."""
    if location.startswith("http://") or location.startswith("https://"):
        return HttpChainSource(location, client)
    return DirectoryChainSource(location)
