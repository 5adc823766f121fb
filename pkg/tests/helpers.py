"""Shared builders for the test modules: live pages and synthetic manifests."""

from datetime import timedelta

import requests

from mementofix.manifest import (
    Manifest,
    compute_fixity,
    render_hash_constructor,
    select_headers,
    trusty_hash,
)
from mementofix.timefmt import from_ts14, to_rfc1123, to_ts14, ts14_to_rfc1123

# .invalid never resolves, so a bug that tries to fetch a synthetic
# memento fails fast instead of hitting the network.
CORPUS_BASE = "https://archive.corpus.invalid/web/"
CORPUS_PUBLISHER = "https://manifest.corpus.invalid/"


def seed_page(archive, path, body, content_type="text/html; charset=UTF-8",
              headers=None, status=200, location=None):
    """Register an origin page on a mock archive; returns its URI."""
    payload = {
        "path": path,
        "body": body,
        "content_type": content_type,
        "headers": headers or {},
        "status": status,
    }
    if location is not None:
        payload["location"] = location
    resp = requests.post(f"{archive.base}/admin/seed", json=payload, timeout=10)
    resp.raise_for_status()
    return resp.json()["uri"]


def capture(archive, uri):
    """Save uri into a mock archive; returns the new URI-M."""
    resp = requests.post(f"{archive.base}/save", params={"uri": uri}, timeout=30)
    resp.raise_for_status()
    return resp.json()["urim"]


def seed_and_capture(archive, path, body, **kwargs):
    return capture(archive, seed_page(archive, path, body, **kwargs))


def tamper(archive, urim, byte_offset):
    resp = requests.post(f"{archive.base}/admin/tamper",
                         json={"urim": urim, "byte_offset": byte_offset},
                         timeout=10)
    resp.raise_for_status()
    return resp.json()


def corpus_manifest(i: int, base: str = CORPUS_BASE) -> Manifest:
    """Deterministic synthetic manifest #i, shaped like a generated one.

    Headers vary across records so block payload sizes differ a little;
    hashes are real digests of the synthetic body so every record
    validates.
    """
    instant = from_ts14("19961022175434") + timedelta(seconds=9973 * i)
    ts = to_ts14(instant)
    uri_r = f"http://site{i % 97}.example.com/page/{i}"
    urim = f"{base}{ts}/{uri_r}"
    body = (
        f"<html><head><title>page {i}</title></head>"
        f"<body>{'lorem ipsum dolor sit amet ' * (i % 23)}corpus {i}</body></html>"
    ).encode("utf-8")
    response_headers = {
        "Content-Type": "text/html; charset=UTF-8",
        "X-Archive-Orig-date": to_rfc1123(instant),
    }
    if i % 3:
        response_headers["X-Archive-Orig-last-modified"] = to_rfc1123(
            instant - timedelta(days=3, hours=i % 11))
    if i % 3 == 2:
        response_headers["X-Archive-Orig-etag"] = f'"tag-{i:08x}"'
    if i % 5 == 0:
        response_headers["X-Archive-Orig-link"] = (
            f'<http://site{i % 97}.example.com/feed>; rel="alternate"')
    selected = select_headers(response_headers)
    man = Manifest(
        uri_r=uri_r,
        uri_m=urim,
        memento_datetime=ts14_to_rfc1123(ts),
        http_headers=selected,
        hash_constructor=render_hash_constructor(selected),
        hash=str(compute_fixity(body, selected)),
    )
    created = instant + timedelta(days=10)
    man.created = to_rfc1123(created)
    man.id = (f"{CORPUS_PUBLISHER}manifest/{to_ts14(created)}/"
              f"{trusty_hash(man)}/{urim}")
    return man


def publish(server_base: str, man: Manifest):
    """POST an unpublished manifest; returns the server's JSON reply."""
    resp = requests.post(f"{server_base}/manifest",
                         json=man.to_dict(include_publication_fields=False),
                         timeout=30)
    if resp.status_code not in (200, 201):
        raise AssertionError(f"publish failed: {resp.status_code} {resp.text}")
    return resp.json()
