"""Verification engine: recompute fixity now, compare with the record.

Two strategies share the same core. The atomic verifier discovers
published manifests through the publication server and archived copies
through archive TimeMaps, keeping only copies independent of the
archive that serves the memento itself. The block verifier walks the
chain (verifying content addresses as it goes), binary-searches every
block for the memento's key, and compares against each matching
record.

Either way the verdict is mechanical: Verified iff at least one
independent source agrees and none disagrees.
"""

import json
import logging
import re
import time
from dataclasses import dataclass, field
from urllib.parse import urlsplit

from .blocks import lookup as block_lookup, walk_chain
from .errors import (BrokenChain, GenerationFailed, NoManifestFound,
                     NoRecordFound, TamperDetected)
from .httpclient import FetchClient
from .manifest import generate_manifest, manifest_from_dict, parse_hash
from .memento import MementoClient, mementos_of, parse_urim, to_raw_urim
from .surt import lookup_variants

logger = logging.getLogger(__name__)

VERIFIED = "Verified"
FAILED = "Failed"

_IP_RE = re.compile(r"^\d{1,3}(\.\d{1,3}){3}$")
_JSON_OBJECT_RE = re.compile(r"\{.*\}", re.DOTALL)


@dataclass
class VerificationReport:
    urim: str
    status: str
    current_hash: str | None = None
    matched: list = field(default_factory=list)      # agreeing source URIs
    mismatched: list = field(default_factory=list)   # disagreeing source URIs
    excluded: list = field(default_factory=list)     # non-independent copies
    block_index: int | None = None
    timings: dict = field(default_factory=dict)
    request_count: int = 0
    diagnostic: str | None = None

    @property
    def verified(self) -> bool:
        return self.status == VERIFIED

    def to_dict(self) -> dict:
        return {
            "urim": self.urim,
            "status": self.status,
            "current-hash": self.current_hash,
            "matched": list(self.matched),
            "mismatched": list(self.mismatched),
            "excluded": list(self.excluded),
            "block-index": self.block_index,
            "timings": dict(self.timings),
            "request-count": self.request_count,
            "diagnostic": self.diagnostic,
        }


def compare_fixity(current: str, historical: str) -> bool:
    """Byte equality of the composite hash strings; both algorithms
    must agree at once."""
    parse_hash(current)
    parse_hash(historical)
    return current == historical


def _settle(report: VerificationReport) -> VerificationReport:
    report.status = VERIFIED if (report.matched and not report.mismatched) else FAILED
    if report.status == FAILED and not report.diagnostic:
        if report.mismatched:
            report.diagnostic = "fixity mismatch"
        elif report.excluded and not report.matched:
            report.diagnostic = "no independent copies (all sources excluded)"
        else:
            report.diagnostic = "no sources found"
    return report


def archive_identity(uri: str, groups: dict | None = None) -> str:
    """Which archive operator a URI belongs to.

    Registered domain (last two host labels) for real hostnames;
    host:port for localhost, bare hostnames, and IP literals, so
    co-hosted test archives on different ports stay distinct.
    Cooperating archives can be folded together via groups.
    """
    parts = urlsplit(uri)
    host = (parts.hostname or "").lower()
    if "." in host and not _IP_RE.match(host):
        identity = ".".join(host.split(".")[-2:])
    else:
        port = parts.port or (443 if parts.scheme == "https" else 80)
        identity = f"{host}:{port}"
    if groups:
        identity = groups.get(identity, identity)
    return identity


class Verifier:
    """Shared clients and caches for a batch of verifications."""

    def __init__(self, client: FetchClient | None = None,
                 archive_groups: dict | None = None):
        self.client = client or FetchClient()
        self.memento_client = MementoClient(self.client)
        self.archive_groups = archive_groups or {}

    # ---- shared steps

    def _regenerate(self, urim: str):
        started = time.monotonic()
        man = generate_manifest(urim, client=self.memento_client)
        return man, time.monotonic() - started

    # ---- atomic

    def verify_atomic(self, urim: str, server_base: str,
                      endpoints: list) -> VerificationReport:
        """Verify one memento against published + archived manifests."""
        total_started = time.monotonic()
        fetches_before = self.client.fetch_count
        report = VerificationReport(urim=urim, status=FAILED)
        memento_archive = archive_identity(urim, self.archive_groups)
        server_base = server_base.rstrip("/")
        generic_uri = f"{server_base}/manifest/{urim}"

        lookup_started = time.monotonic()
        sources = []                     # (source_uri, manifest_dict, identity)
        diagnostics = []

        # the publication server's own copy, negotiated by memento datetime
        try:
            timegate_uri = f"{server_base}/manifest/{parse_urim(urim).timestamp}/{urim}"
            result = self.client.fetch(timegate_uri)
            if result.status == 404:
                raise NoManifestFound(urim)
            if result.ok:
                sources.append((result.url, json.loads(result.body.decode("utf-8")),
                                archive_identity(server_base, self.archive_groups)))
        except NoManifestFound:
            diagnostics.append("server has no manifest for this memento")
        except Exception as exc:
            diagnostics.append(f"server lookup failed: {exc}")

        # archived copies, discovered through each archive's TimeMap
        for endpoint in endpoints:
            try:
                entries = self.memento_client.fetch_timemap(
                    endpoint.timemap_uri(generic_uri))
            except Exception as exc:
                diagnostics.append(f"{endpoint.name}: timemap unavailable ({exc})")
                continue
            for entry in mementos_of(entries):
                try:
                    raw = to_raw_urim(entry.uri, endpoint.raw_modifier)
                    result = self.client.fetch(raw, require_ok=True)
                    sources.append((entry.uri, _extract_manifest(result.body),
                                    archive_identity(entry.uri, self.archive_groups)))
                except Exception as exc:
                    diagnostics.append(f"{entry.uri}: unusable copy ({exc})")
        lookup_elapsed = time.monotonic() - lookup_started

        generation_elapsed = 0.0
        verify_elapsed = 0.0
        if sources:
            try:
                current, generation_elapsed = self._regenerate(urim)
                report.current_hash = current.hash
            except GenerationFailed as exc:
                report.diagnostic = str(exc)
                sources = []
            verify_started = time.monotonic()
            for source_uri, body, identity in sources:
                try:
                    historical = manifest_from_dict(body).hash
                    agree = compare_fixity(report.current_hash, historical)
                except Exception as exc:
                    diagnostics.append(f"{source_uri}: bad manifest ({exc})")
                    continue
                if identity == memento_archive:
                    report.excluded.append(source_uri)
                elif agree:
                    report.matched.append(source_uri)
                else:
                    report.mismatched.append(source_uri)
            verify_elapsed = time.monotonic() - verify_started
        elif not report.diagnostic:
            report.diagnostic = "; ".join(diagnostics) or "no manifest discovered"

        report.timings = _timings(lookup_elapsed, generation_elapsed,
                                  verify_elapsed, total_started)
        report.request_count = self.client.fetch_count - fetches_before
        if diagnostics and not report.diagnostic:
            logger.debug("verify_atomic %s notes: %s", urim, "; ".join(diagnostics))
        return _settle(report)

    # ---- block

    def verify_block(self, urim: str, source) -> VerificationReport:
        """Verify one memento against the block chain.

        Raises NoRecordFound when the chain is intact but holds no
        record for the memento. A damaged chain yields a Failed report
        carrying the chain diagnostic unless the record was found in
        the still-verifiable newest blocks.
        """
        total_started = time.monotonic()
        fetches_before = self.client.fetch_count
        report = VerificationReport(urim=urim, status=FAILED)

        lookup_started = time.monotonic()
        blocks, chain_error = _walk(source)
        matches = []                      # (block_index or None, block, record)
        chain_len = len(blocks) if chain_error is None else None
        keys = lookup_variants(urim)
        for pos, block in enumerate(blocks):
            index = chain_len - pos if chain_len is not None else None
            for key in keys:
                for rec in block_lookup(block, key):
                    matches.append((index, block, rec))
        lookup_elapsed = time.monotonic() - lookup_started

        if not matches:
            if chain_error is not None:
                report.diagnostic = f"chain unusable: {chain_error}"
                report.timings = _timings(lookup_elapsed, 0.0, 0.0, total_started)
                report.request_count = self.client.fetch_count - fetches_before
                return _settle(report)
            raise NoRecordFound(f"no fixity record for {urim}")

        try:
            current, generation_elapsed = self._regenerate(urim)
            report.current_hash = current.hash
        except GenerationFailed as exc:
            report.diagnostic = str(exc)
            report.timings = _timings(lookup_elapsed, 0.0, 0.0, total_started)
            report.request_count = self.client.fetch_count - fetches_before
            return _settle(report)

        verify_started = time.monotonic()
        for index, block, rec in matches:
            source_ref = f"{block.self_hash}:{rec.key}"
            try:
                agree = compare_fixity(report.current_hash,
                                       rec.manifest().hash)
            except Exception as exc:
                report.mismatched.append(source_ref)
                report.diagnostic = f"unreadable record: {exc}"
                continue
            if agree:
                report.matched.append(source_ref)
                if report.block_index is None:
                    report.block_index = index
            else:
                report.mismatched.append(source_ref)
        verify_elapsed = time.monotonic() - verify_started

        if chain_error is not None and not report.diagnostic:
            report.diagnostic = f"chain damaged beyond block: {chain_error}"
        report.timings = _timings(lookup_elapsed, generation_elapsed,
                                  verify_elapsed, total_started)
        report.request_count = self.client.fetch_count - fetches_before
        return _settle(report)

    def verify_block_batch(self, urims: list, source) -> list:
        reports = []
        for urim in urims:
            try:
                reports.append(self.verify_block(urim, source))
            except (NoRecordFound, TamperDetected, BrokenChain) as exc:
                reports.append(_settle(VerificationReport(
                    urim=urim, status=FAILED, diagnostic=str(exc))))
        return reports

    def verify_atomic_batch(self, urims: list, server_base: str,
                            endpoints: list) -> list:
        reports = []
        for urim in urims:
            try:
                reports.append(self.verify_atomic(urim, server_base, endpoints))
            except (NoManifestFound, GenerationFailed) as exc:
                reports.append(_settle(VerificationReport(
                    urim=urim, status=FAILED, diagnostic=str(exc))))
        return reports


def _walk(source) -> tuple:
    """Walk a chain source newest→oldest; never raises.

    Returns (blocks, error). error is the TamperDetected/BrokenChain
    that stopped the walk, or None when the genesis block was reached.
    Sources cache block bytes, so only the first walk costs fetches.
    """
    blocks = []
    try:
        tip = source.tip()
        if tip is None:
            return [], None
        for block in walk_chain(tip, source.fetch):
            blocks.append(block)
    except (TamperDetected, BrokenChain) as exc:
        return blocks, exc
    return blocks, None


def _extract_manifest(body: bytes) -> dict:
    """Archived manifests may be wrapped in replay chrome; fall back to
    the first JSON object found in the body."""
    text = body.decode("utf-8", errors="replace")
    try:
        return json.loads(text)
    except ValueError:
        m = _JSON_OBJECT_RE.search(text)
        if not m:
            raise
        return json.loads(m.group(0))


def _timings(lookup, generation, verify, total_started) -> dict:
    return {
        "lookup": lookup,
        "generation": generation,
        "verify": verify,
        "total": time.monotonic() - total_started,
    }


def render_table(reports: list) -> str:
    """Line-oriented batch report.

    Columns: SN, Status, BlockIdx, TotalT, LookupT, GenerationT,
    VerifyT, URIM.
    """
    lines = ["SN  Status  BlockIdx    TotalT  LookupT  GenerationT  VerifyT   URIM"]
    for sn, rep in enumerate(reports, start=1):
        t = rep.timings or {}
        status = "VERIFIED" if rep.verified else "FAILED"
        idx = rep.block_index if rep.block_index is not None else "-"
        lines.append(
            f"{sn:<3d}{status:<9s}{str(idx):<8s}"
            f"{t.get('total', 0.0):>8.5f}  {t.get('lookup', 0.0):>7.5f}  "
            f"{t.get('generation', 0.0):>9.5f}  {t.get('verify', 0.0):>7.5f}   "
            f"{rep.urim}")
    return "\n".join(lines)


def render_json(reports: list) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)
