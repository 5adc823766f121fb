"""Dissemination of published fixity resources into web archives.

An ArchiveEndpoint describes one on-demand archive by its save and
TimeMap URI templates. disseminate() submits one URI to every endpoint
concurrently, observing a per-endpoint politeness delay, and returns a
receipt (or a SubmissionFailed) per endpoint; one archive being down
never aborts the batch.
"""

import concurrent.futures
import logging
import math
import threading
import time
from dataclasses import dataclass

import requests

from .errors import SubmissionFailed

logger = logging.getLogger(__name__)

DEFAULT_DELAY = 1.0


@dataclass
class ArchiveEndpoint:
    name: str
    save_template: str            # contains $uri
    timemap_template: str         # contains $uri
    raw_modifier: str = "id_"
    accepts_gzip: bool = True
    follows_redirects: bool = True

    @classmethod
    def for_mock(cls, base: str, name: str | None = None) -> "ArchiveEndpoint":
        base = base.rstrip("/")
        return cls(
            name=name or base,
            save_template=f"{base}/save?uri=$uri",
            timemap_template=f"{base}/web/timemap/link/$uri",
        )

    def save_uri(self, uri: str) -> str:
        return self.save_template.replace("$uri", uri)

    def timemap_uri(self, uri: str) -> str:
        return self.timemap_template.replace("$uri", uri)


@dataclass
class DisseminationReceipt:
    endpoint: str
    submitted_uri: str
    resulting_urim: str
    elapsed: float
    resources_created: int = 1


def successes(results: list) -> list:
    return [r for r in results if isinstance(r, DisseminationReceipt)]


def failures(results: list) -> list:
    return [r for r in results if isinstance(r, SubmissionFailed)]


class Gateway:
    """Fans submissions out to archive endpoints."""

    def __init__(self, endpoints: list, delay: float = DEFAULT_DELAY,
                 timeout: float = 60.0):
        self.endpoints = list(endpoints)
        self.delay = delay
        self.timeout = timeout
        self.session = requests.Session()
        self._pace_lock = threading.Lock()
        self._last_submit = {}        # endpoint name -> monotonic time
        self._count_lock = threading.Lock()
        self.success_count = 0
        self.per_endpoint = {}        # endpoint name -> successful receipts

    def _pace(self, endpoint: ArchiveEndpoint):
        if self.delay <= 0:
            return
        while True:
            with self._pace_lock:
                last = self._last_submit.get(endpoint.name)
                now = time.monotonic()
                if last is None or now - last >= self.delay:
                    self._last_submit[endpoint.name] = now
                    return
                wait = self.delay - (now - last)
            time.sleep(wait)

    def _submit(self, uri: str, endpoint: ArchiveEndpoint):
        self._pace(endpoint)
        started = time.monotonic()
        try:
            resp = self.session.post(endpoint.save_uri(uri), timeout=self.timeout)
            if resp.status_code != 200:
                raise SubmissionFailed(endpoint.name,
                                       f"HTTP {resp.status_code}: {resp.text[:200]}")
            payload = resp.json()
        except SubmissionFailed:
            raise
        except Exception as exc:
            raise SubmissionFailed(endpoint.name, exc) from exc
        receipt = DisseminationReceipt(
            endpoint=endpoint.name,
            submitted_uri=uri,
            resulting_urim=payload["urim"],
            elapsed=time.monotonic() - started,
            resources_created=int(payload.get("resources_created", 1)),
        )
        with self._count_lock:
            self.success_count += 1
            self.per_endpoint.setdefault(endpoint.name, []).append(receipt)
        logger.info("disseminated %s to %s as %s", uri, endpoint.name,
                    receipt.resulting_urim)
        return receipt

    def disseminate(self, uri: str) -> list:
        """Submit uri to every endpoint; receipts and failures in
        endpoint order."""
        if not self.endpoints:
            return []
        results = [None] * len(self.endpoints)
        with concurrent.futures.ThreadPoolExecutor(
                max_workers=len(self.endpoints)) as pool:
            futures = {pool.submit(self._submit, uri, ep): i
                       for i, ep in enumerate(self.endpoints)}
            for fut, i in futures.items():
                try:
                    results[i] = fut.result()
                except SubmissionFailed as exc:
                    logger.warning("dissemination failed: %s", exc)
                    results[i] = exc
        return results


def resource_accounting(n_mementos: int, k_archives: int, block_size: int):
    """Closed-form archived-resource counts: one per manifest per
    archive when disseminating atomically, one per block per archive
    when disseminating the chain."""
    if block_size <= 0:
        raise ValueError("block_size must be positive")
    atomic = n_mementos * k_archives
    block = k_archives * math.ceil(n_mementos / block_size)
    return atomic, block
