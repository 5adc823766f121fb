"""HTTP fetch layer used by every client-side component.

A FetchClient follows redirects itself (recording each hop, since
verification reasons about archived 302 chains), reads bodies without
transparent content decoding (a served block must round-trip its gzip
bytes bit-exactly), and counts logical fetches. One logical fetch is one
``fetch()`` call including all redirects it follows; the request-economy
accounting in the verifier is defined in these units.
"""

import logging
import threading
from dataclasses import dataclass, field
from urllib.parse import urljoin

import requests

from .errors import HttpError, Timeout

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0
MAX_REDIRECTS = 5

REDIRECT_STATUSES = {301, 302, 303, 307, 308}


@dataclass
class Hop:
    """One redirect response followed on the way to the final URL."""

    url: str
    status: int
    location: str | None = None


@dataclass
class FetchResult:
    status: int
    headers: dict
    body: bytes
    url: str                      # final URL after redirects
    hops: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300


class FetchClient:
    """requests.Session wrapper with hop recording and fetch counting.

    Stateless apart from the counter and the underlying connection pool;
    safe to share across threads.
    """

    def __init__(self, timeout: float = DEFAULT_TIMEOUT, user_agent: str = "mementofix/0.1"):
        self.timeout = timeout
        self.session = requests.Session()
        self.session.headers["User-Agent"] = user_agent
        self._lock = threading.Lock()
        self.fetch_count = 0
        self.request_count = 0

    def fetch(self, url: str, headers: dict | None = None,
              follow_redirects: bool = True, max_redirects: int = MAX_REDIRECTS,
              require_ok: bool = False) -> FetchResult:
        """GET a URL. Raises Timeout; raises HttpError only if require_ok."""
        with self._lock:
            self.fetch_count += 1
        hops = []
        current = url
        for _ in range(max_redirects + 1):
            resp = self._get(current, headers)
            location = resp.headers.get("Location")
            if follow_redirects and resp.status_code in REDIRECT_STATUSES and location:
                hops.append(Hop(current, resp.status_code, location))
                resp.close()
                current = urljoin(current, location)
                continue
            body = self._read_raw(resp)
            result = FetchResult(resp.status_code, dict(resp.headers), body, current, hops)
            if require_ok and not result.ok:
                raise HttpError(result.status, current)
            return result
        raise HttpError(hops[-1].status, current, f"redirect depth exceeded at {current}")

    def _get(self, url, headers):
        with self._lock:
            self.request_count += 1
        try:
            return self.session.get(url, headers=headers, timeout=self.timeout,
                                    allow_redirects=False, stream=True)
        except requests.exceptions.Timeout as exc:
            raise Timeout(f"timed out fetching {url}") from exc
        except requests.exceptions.RequestException as exc:
            raise HttpError(0, url, f"request failed for {url}: {exc}") from exc

    @staticmethod
    def _read_raw(resp) -> bytes:
        # decode_content=False keeps Content-Encoding payloads (gzip blocks)
        # on the wire form; chunked transfer is still reassembled.
        try:
            return resp.raw.read(decode_content=False)
        finally:
            resp.close()

    def reset_counts(self):
        with self._lock:
            self.fetch_count = 0
            self.request_count = 0
