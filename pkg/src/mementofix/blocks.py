"""Fixity blocks: sorted, content-addressed, chained bundles of manifests.

A block is a UKVS text file. Six "!"-prefixed header lines come first,
then one line per record: the SURT of a URI-M, a space, and the
manifest as single-line JSON (without @id and @context). Record lines
are sorted byte-wise, so "!" (0x21) keeps headers on top and any block
is binary searchable.

The sha256 of the uncompressed bytes names the block: it is the
filename stem, the URL path segment, and the etag. Each block's
prev_block header carries the hash of its predecessor, the first block
pointing at sixty-four zeros, which turns the store into a
tamper-evident chain without inventing another blockchain.
"""

import bisect
import gzip
import hashlib
import io
import json
import logging
import os
import re
from dataclasses import dataclass

from .errors import BrokenChain, DuplicateLine, NotSorted, ParseError, TamperDetected
from .manifest import Manifest, canonical_json, manifest_from_dict
from .surt import lookup_variants, to_surt
from .timefmt import now_utc, to_rfc1123, to_ts14

logger = logging.getLogger(__name__)

BLOCK_CONTEXT = "http://oduwsdl.github.io/contexts/fixity"
BLOCK_TYPE = "FixityBlock"
FIELD_KEYS = ["surt"]
ZERO_REF = "0" * 64
DEFAULT_BLOCK_SIZE = 100

_HASH_PREFIX = "sha256:"


@dataclass(frozen=True)
class BlockHeaders:
    context: tuple
    fields_keys: tuple
    id_uri: str
    created_at: str          # 14 digit timestamp
    prev_block: str          # "sha256:<64 hex>"
    type: str = BLOCK_TYPE

    @property
    def prev_hex(self) -> str:
        return self.prev_block[len(_HASH_PREFIX):]


@dataclass(frozen=True)
class FixityRecord:
    key: str                 # SurtKey
    payload: str             # single-line JSON, no @id/@context

    @property
    def line(self) -> str:
        return f"{self.key} {self.payload}"

    def manifest(self) -> Manifest:
        return manifest_from_dict(json.loads(self.payload))


@dataclass
class FixityBlock:
    headers: BlockHeaders
    records: list
    raw: bytes               # uncompressed serialized form
    self_hash: str           # sha256 hex of raw

    def __len__(self):
        return len(self.records)

    def encoded_lines(self) -> list:
        lines = getattr(self, "_lines", None)
        if lines is None:
            lines = [r.line.encode("utf-8") for r in self.records]
            self._lines = lines
        return lines


def make_headers(id_uri: str, created_at: str, prev: str) -> BlockHeaders:
    return BlockHeaders(
        context=(BLOCK_CONTEXT,),
        fields_keys=tuple(FIELD_KEYS),
        id_uri=id_uri,
        created_at=created_at,
        prev_block=_HASH_PREFIX + prev,
    )


def serialize_headers(h: BlockHeaders) -> str:
    ctx = ", ".join(json.dumps(c) for c in h.context)
    keys = ", ".join(json.dumps(k) for k in h.fields_keys)
    return (
        f"!context [{ctx}]\n"
        f"!fields {{keys: [{keys}]}}\n"
        f"!id {{uri: {json.dumps(h.id_uri)}}}\n"
        f"!meta {{created_at: {json.dumps(h.created_at)}}}\n"
        f"!meta {{prev_block: {json.dumps(h.prev_block)}}}\n"
        f"!meta {{type: {json.dumps(h.type)}}}\n"
    )


def build_block(manifests: list, prev: str, id_uri: str,
                created_at: str | None = None) -> FixityBlock:
    """Bundle manifests into one sorted block chained onto prev.

    prev is the current tip's hex hash, or ZERO_REF for the first
    block. Manifests lacking a created datetime get stamped with the
    block's creation instant; input order does not matter.
    """
    if not manifests:
        raise ValueError("a block needs at least one manifest")
    created_at = created_at or to_ts14(now_utc())
    stamp = to_rfc1123(now_utc())
    records = []
    for man in manifests:
        d = man.to_record_dict()
        if "created" not in d:
            d["created"] = stamp
        payload = canonical_json(d).decode("utf-8")
        if "\n" in payload:
            raise ParseError("manifest payload serialized with a newline")
        records.append(FixityRecord(to_surt(man.uri_m), payload))
    records.sort(key=lambda r: r.line.encode("utf-8"))
    for a, b in zip(records, records[1:]):
        if a.line == b.line:
            raise DuplicateLine(f"identical record lines for {a.key}")
    headers = make_headers(id_uri, created_at, prev)
    raw = (serialize_headers(headers)
           + "".join(r.line + "\n" for r in records)).encode("utf-8")
    block = FixityBlock(headers, records, raw, hashlib.sha256(raw).hexdigest())
    logger.debug("built block %s with %d records", block.self_hash[:12], len(records))
    return block


def compress_block(block_or_raw) -> bytes:
    raw = block_or_raw.raw if isinstance(block_or_raw, FixityBlock) else block_or_raw
    buf = io.BytesIO()
    # mtime pinned so identical content compresses to identical bytes
    with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0) as gz:
        gz.write(raw)
    return buf.getvalue()


def decompress(data: bytes) -> bytes:
    if data[:2] == b"\x1f\x8b":
        return gzip.decompress(data)
    return data


_RELAXED_KEY = re.compile(r"([{,]\s*)([A-Za-z_][A-Za-z0-9_-]*):")


def _parse_header_value(text: str):
    """UKVS headers use unquoted map keys; quote them, then parse."""
    return json.loads(_RELAXED_KEY.sub(r'\1"\2":', text))


def parse_block(raw: bytes) -> FixityBlock:
    """Parse and validate uncompressed block bytes."""
    fields = {}
    records = []
    prev_line = None
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line:
            raise ParseError(f"blank line {lineno} in block")
        if line.startswith("!"):
            if records:
                raise NotSorted(f"header after records at line {lineno}")
            name, _, rest = line[1:].partition(" ")
            try:
                value = _parse_header_value(rest)
            except ValueError as exc:
                raise ParseError(f"bad header line {lineno}: {line!r}") from exc
            if name == "meta":
                fields.update(value)
            else:
                fields[name] = value
            continue
        key, sep, payload = line.partition(" ")
        if not sep:
            raise ParseError(f"record without payload at line {lineno}")
        encoded = line.encode("utf-8")
        if prev_line is not None:
            if encoded == prev_line:
                raise DuplicateLine(f"duplicate record line at {lineno}")
            if encoded < prev_line:
                raise NotSorted(f"record order violation at line {lineno}")
        prev_line = encoded
        records.append(FixityRecord(key, payload))
    for required in ("context", "fields", "id", "created_at", "prev_block", "type"):
        if required not in fields:
            raise ParseError(f"missing block header: {required}")
    if fields["type"] != BLOCK_TYPE:
        raise ParseError(f"unexpected block type {fields['type']!r}")
    if fields["fields"].get("keys") != FIELD_KEYS:
        raise ParseError(f"unexpected key fields {fields['fields']!r}")
    headers = BlockHeaders(
        context=tuple(fields["context"]),
        fields_keys=tuple(fields["fields"]["keys"]),
        id_uri=fields["id"]["uri"],
        created_at=fields["created_at"],
        prev_block=fields["prev_block"],
    )
    return FixityBlock(headers, records, raw, hashlib.sha256(raw).hexdigest())


def lookup(block: FixityBlock, key: str) -> list:
    """Binary search for all records keyed exactly by key."""
    lines = block.encoded_lines()
    probe = (key + " ").encode("utf-8")
    i = bisect.bisect_left(lines, probe)
    found = []
    while i < len(lines) and lines[i].startswith(probe):
        found.append(block.records[i])
        i += 1
    return found


def lookup_uri(block: FixityBlock, uri: str) -> list:
    """Lookup that also probes tolerated key variants of a URI-M."""
    found, seen = [], set()
    for key in lookup_variants(uri):
        for rec in lookup(block, key):
            if rec.line not in seen:
                seen.add(rec.line)
                found.append(rec)
    return found


def walk_chain(tip: str, fetch):
    """Yield blocks newest to oldest, verifying content addresses.

    fetch maps a hex ref to that block's bytes (compressed or not).
    Any byte damage surfaces as TamperDetected for the damaged ref;
    an unresolvable ref surfaces as BrokenChain.
    """
    ref = tip
    while ref != ZERO_REF:
        try:
            data = fetch(ref)
        except (TamperDetected, BrokenChain):
            raise
        except Exception as exc:
            raise BrokenChain(ref) from exc
        try:
            raw = decompress(data)
        except Exception as exc:
            raise TamperDetected(ref) from exc
        if hashlib.sha256(raw).hexdigest() != ref:
            raise TamperDetected(ref)
        block = parse_block(raw)
        yield block
        ref = block.headers.prev_hex


def chain_lookup(tip: str, key, fetch) -> list:
    """Search the whole chain for a key (or list of candidate keys).

    Returns (block_index, record) pairs newest first; block 1 is the
    first block ever written, matching how humans count a ledger.
    """
    keys = [key] if isinstance(key, str) else list(key)
    blocks = list(walk_chain(tip, fetch))
    results, seen = [], set()
    for pos, block in enumerate(blocks):
        index = len(blocks) - pos
        for k in keys:
            for rec in lookup(block, k):
                if (index, rec.line) not in seen:
                    seen.add((index, rec.line))
                    results.append((index, rec))
    return results


_FILENAME_RE = re.compile(
    r"^(\d{14})-([0-9a-f]{64})-([0-9a-f]{64})\.ukvs(\.gz)?$")


def block_filename(block: FixityBlock, compressed: bool = False) -> str:
    name = (f"{block.headers.created_at}-{block.headers.prev_hex}"
            f"-{block.self_hash}.ukvs")
    return name + ".gz" if compressed else name


def parse_block_filename(name: str):
    """-> (created_at, prev_hex, self_hex, is_compressed)"""
    m = _FILENAME_RE.match(name)
    if not m:
        raise ParseError(f"not a block filename: {name}")
    return m.group(1), m.group(2), m.group(3), bool(m.group(4))


class BlockStore:
    """Directory of immutable block files forming one chain.

    Stores each block both uncompressed (.ukvs) and compressed
    (.ukvs.gz). Chain extension picks prev = current tip under a lock;
    existing files are never rewritten.
    """

    def __init__(self, directory):
        import threading

        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)
        self._write_lock = threading.Lock()

    def _scan(self) -> dict:
        """self_hex -> (filename, prev_hex, created_at), compressed files."""
        out = {}
        for name in os.listdir(self.directory):
            if not name.endswith(".ukvs.gz"):
                continue
            created_at, prev_hex, self_hex, _ = parse_block_filename(name)
            out[self_hex] = (name, prev_hex, created_at)
        return out

    def tip(self) -> str | None:
        refs = self._scan()
        pointed_to = {prev for _, prev, _ in refs.values()}
        tips = [h for h in refs if h not in pointed_to]
        if not tips:
            return None
        if len(tips) > 1:
            raise BrokenChain(f"forked store, multiple tips: {sorted(tips)}")
        return tips[0]

    def ordered_refs(self) -> list:
        """Hex refs from the first block to the tip."""
        refs = self._scan()
        tip = self.tip()
        chain = []
        ref = tip
        while ref is not None and ref != ZERO_REF:
            if ref not in refs:
                raise BrokenChain(ref)
            chain.append(ref)
            ref = refs[ref][1]
        chain.reverse()
        return chain

    def fetch(self, ref: str) -> bytes:
        refs = self._scan()
        if ref not in refs:
            raise BrokenChain(ref)
        with open(os.path.join(self.directory, refs[ref][0]), "rb") as fh:
            return fh.read()

    def load(self, ref: str) -> FixityBlock:
        return parse_block(decompress(self.fetch(ref)))

    def save(self, block: FixityBlock) -> str:
        """Write both forms; returns the compressed file path."""
        plain = os.path.join(self.directory, block_filename(block))
        with open(plain, "wb") as fh:
            fh.write(block.raw)
        gz_path = os.path.join(self.directory, block_filename(block, compressed=True))
        with open(gz_path, "wb") as fh:
            fh.write(compress_block(block))
        return gz_path

    def extend(self, manifests: list, id_uri: str,
               created_at: str | None = None) -> FixityBlock:
        with self._write_lock:
            prev = self.tip() or ZERO_REF
            block = build_block(manifests, prev, id_uri, created_at)
            self.save(block)
        return block
