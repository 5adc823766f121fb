"""Fixity manifests: creation, canonical serialization, dual hashing.

A manifest records everything needed to re-derive and compare the
fixity of one memento: its URI-R/URI-M/Memento-Datetime triple, the
response headers folded into the hash, a shell command template any
third party can run to reproduce the digests, and the digests
themselves under two algorithms (an attacker must collide MD5 and
SHA-256 simultaneously).

Serialization is canonical JSON: UTF-8, byte-sorted keys, no
insignificant whitespace. The publication fields @id and created are
excluded from the canonical form that gets hashed into trusty URIs and
unpublished filenames, which breaks the self-reference cycle (the @id
embeds the hash).
"""

import hashlib
import json
import logging
import os
import re
from dataclasses import dataclass

from .errors import GenerationFailed, InvalidManifest, MalformedHash
from .memento import MementoClient, parse_urim
from .timefmt import from_rfc1123, ts14_to_rfc1123

logger = logging.getLogger(__name__)

DEFAULT_CONTEXT = "http://manifest.ws-dl.cs.odu.edu/"

PREFERENCE_APPLIED = "original-links, original-content"

# Original-response headers preserved by archives; canonical spellings.
PRESERVED_HEADERS = (
    "X-Archive-Orig-date",
    "X-Archive-Orig-etag",
    "X-Archive-Orig-last-modified",
    "X-Archive-Orig-link",
)

HASH_RE = re.compile(r"^md5:[0-9a-f]{32} sha256:[0-9a-f]{64}$")

REQUIRED_FIELDS = ("uri-r", "uri-m", "memento-datetime", "http-headers",
                   "hash-constructor", "hash")


@dataclass(frozen=True)
class FixityHash:
    md5_hex: str
    sha256_hex: str

    def __str__(self) -> str:
        return f"md5:{self.md5_hex} sha256:{self.sha256_hex}"


def parse_hash(value: str) -> FixityHash:
    if not HASH_RE.match(value):
        raise MalformedHash(f"bad hash field: {value!r}")
    md5_part, sha_part = value.split(" ")
    return FixityHash(md5_part[4:], sha_part[7:])


def select_headers(response_headers) -> dict:
    """Pick the headers that participate in the manifest.

    Content-Type first, then the preserved original headers in
    byte-lexicographic name order, then Preference-Applied (recorded in
    the manifest, never hashed). Matching is case-insensitive; output
    names are canonical.
    """
    lower = {k.lower(): v for k, v in response_headers.items()}
    selected = {}
    if "content-type" in lower:
        selected["Content-Type"] = lower["content-type"]
    for name in PRESERVED_HEADERS:
        if name.lower() in lower:
            selected[name] = lower[name.lower()]
    selected["Preference-Applied"] = PREFERENCE_APPLIED
    return selected


def _hashed_values(selected: dict) -> list:
    return [v for k, v in selected.items() if k != "Preference-Applied"]


def compute_fixity(body: bytes, selected: dict) -> FixityHash:
    """Digest body bytes immediately followed by the selected header
    values joined by single spaces (no separator, no trailing newline).
    """
    data = bytes(body) + " ".join(_hashed_values(selected)).encode("utf-8")
    return FixityHash(hashlib.md5(data).hexdigest(), hashlib.sha256(data).hexdigest())


def render_hash_constructor(selected: dict) -> str:
    """Shell template that re-derives the hash field.

    $uri-m and the $<Header-Name> tokens get substituted with manifest
    values; the pipeline prints "md5:<hex> sha256:<hex>".
    """
    tokens = " ".join("$" + k for k in selected if k != "Preference-Applied")
    return (
        "(curl -s '$uri-m' && echo -n '" + tokens + "') | "
        "tee >(sha256sum) >(md5sum) >/dev/null | cut -d ' ' -f 1 | "
        "paste -d':' <(echo -e 'md5\nsha256') - | paste -d' ' - -"
    )


@dataclass
class Manifest:
    uri_r: str
    uri_m: str
    memento_datetime: str          # RFC 1123
    http_headers: dict             # ordered, includes Preference-Applied
    hash_constructor: str
    hash: str                      # "md5:<32 hex> sha256:<64 hex>"
    context: str = DEFAULT_CONTEXT
    created: str | None = None     # RFC 1123, set at publication
    id: str | None = None          # trusty URI, set at publication

    def to_dict(self, include_publication_fields: bool = True,
                include_context: bool = True) -> dict:
        d = {}
        if include_context:
            d["@context"] = self.context
        if include_publication_fields:
            if self.created is not None:
                d["created"] = self.created
            if self.id is not None:
                d["@id"] = self.id
        d.update({
            "uri-r": self.uri_r,
            "uri-m": self.uri_m,
            "memento-datetime": self.memento_datetime,
            "http-headers": dict(self.http_headers),
            "hash-constructor": self.hash_constructor,
            "hash": self.hash,
        })
        return d

    def to_record_dict(self) -> dict:
        """Block-record form: no @id, no @context, created retained."""
        d = self.to_dict(include_publication_fields=True, include_context=False)
        d.pop("@id", None)
        return d

    def fixity(self) -> FixityHash:
        return parse_hash(self.hash)


def canonical_bytes(man: Manifest, include_publication_fields: bool = True) -> bytes:
    return canonical_json(man.to_dict(include_publication_fields))


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")


def trusty_hash(man: Manifest) -> str:
    """Hex sha256 of the canonical form without publication fields.

    This is the hash segment of the manifest's trusty URI and the stem
    of its unpublished filename, so the pre-publication file and the
    later published resource vouch for each other.
    """
    return hashlib.sha256(canonical_bytes(man, include_publication_fields=False)).hexdigest()


def manifest_from_dict(d: dict) -> Manifest:
    missing = [f for f in REQUIRED_FIELDS if f not in d]
    if missing:
        raise InvalidManifest(f"missing fields: {', '.join(missing)}")
    man = Manifest(
        uri_r=d["uri-r"],
        uri_m=d["uri-m"],
        memento_datetime=d["memento-datetime"],
        http_headers=dict(d["http-headers"]),
        hash_constructor=d["hash-constructor"],
        hash=d["hash"],
        context=d.get("@context", DEFAULT_CONTEXT),
        created=d.get("created"),
        id=d.get("@id"),
    )
    validate_manifest(man)
    return man


def validate_manifest(man: Manifest):
    if not HASH_RE.match(man.hash):
        raise InvalidManifest(f"bad hash field: {man.hash!r}")
    if "Preference-Applied" not in man.http_headers:
        raise InvalidManifest("http-headers lacks Preference-Applied")
    try:
        parsed = parse_urim(man.uri_m)
    except Exception as exc:
        raise InvalidManifest(f"uri-m does not parse: {man.uri_m}") from exc
    if parsed.original != man.uri_r:
        raise InvalidManifest(
            f"uri-m embeds {parsed.original!r}, uri-r says {man.uri_r!r}")
    if man.created is not None:
        if from_rfc1123(man.created) < from_rfc1123(man.memento_datetime):
            raise InvalidManifest("created precedes memento-datetime")


def generate_manifest(urim: str, client: MementoClient | None = None,
                      context: str = DEFAULT_CONTEXT) -> Manifest:
    """Fetch the raw memento and derive its fixity manifest.

    created and @id stay unset; publication fills them in.
    """
    client = client or MementoClient()
    parsed = parse_urim(urim)
    try:
        body, headers, _ = client.fetch_raw(parsed.urim)
    except Exception as exc:
        raise GenerationFailed(f"cannot fetch {urim}: {exc}") from exc
    selected = select_headers(headers)
    fixity = compute_fixity(body, selected)
    mdt = headers.get("Memento-Datetime") or ts14_to_rfc1123(parsed.timestamp)
    man = Manifest(
        uri_r=parsed.original,
        uri_m=parsed.urim,
        memento_datetime=mdt,
        http_headers=selected,
        hash_constructor=render_hash_constructor(selected),
        hash=str(fixity),
        context=context,
    )
    logger.debug("generated manifest for %s: %s", urim, man.hash)
    return man


def save_manifest(man: Manifest, directory) -> str:
    """Write the unpublished form; the filename stem is its sha256."""
    stem = trusty_hash(man)
    path = os.path.join(str(directory), stem + ".json")
    with open(path, "wb") as fh:
        fh.write(canonical_bytes(man, include_publication_fields=False))
    return path


def load_manifest(path) -> Manifest:
    with open(path, "rb") as fh:
        return manifest_from_dict(json.loads(fh.read().decode("utf-8")))
