"""Publication server for fixity manifests and block chains.

Manifests are published under two URIs. The generic URI

    /manifest/<URI-M>

always redirects to the newest trusty URI

    /manifest/<ts14>/<sha256-hex>/<URI-M>

whose hash segment is the sha256 of the manifest's canonical bytes
without @id/created, so the URI itself vouches for the content. A
datetime segment of 4 to 14 digits instead negotiates the closest
manifest by creation time.

Published manifests are also staged; POST /blocks cuts everything
staged since the last cut into a new block chained onto the tip, and
GET /blocks redirects to the tip. Storage is an append-only directory
tree; the in-memory index is rebuilt by scanning it, so restarts
preserve every resolution.
"""

import json
import logging
import os
import re
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .blocks import BlockStore
from .errors import InvalidManifest
from .manifest import canonical_bytes, manifest_from_dict, trusty_hash
from .timefmt import from_rfc1123, from_ts14, now_utc, pad_ts, to_rfc1123, to_ts14

logger = logging.getLogger(__name__)

SERVER_ID = "ArchivalFixity/0.1"

_TRUSTY_RE = re.compile(r"^(\d{14})/([0-9a-f]{64})/(.+)$", re.DOTALL)
_TIMEGATE_RE = re.compile(r"^(\d{4,14})/(.+)$", re.DOTALL)
_MANIFEST_FILE_RE = re.compile(r"^(\d{8})-(\d{14})-([0-9a-f]{64})\.json$")


@dataclass
class PublishedManifest:
    seq: int
    hash_hex: str
    ts14: str                  # publication instant
    urim: str
    created: str               # RFC 1123, equals ts14
    body: bytes                # published canonical JSON

    @property
    def trusty_path(self) -> str:
        return f"/manifest/{self.ts14}/{self.hash_hex}/{self.urim}"

    @property
    def generic_path(self) -> str:
        return f"/manifest/{self.urim}"

    @property
    def filename(self) -> str:
        return f"{self.seq:08d}-{self.ts14}-{self.hash_hex}.json"


class ServerState:
    """Index over the storage directory plus the staging queue."""

    def __init__(self, storage_dir, clock=None):
        self.storage_dir = str(storage_dir)
        self.manifest_dir = os.path.join(self.storage_dir, "manifests")
        os.makedirs(self.manifest_dir, exist_ok=True)
        self.blocks = BlockStore(os.path.join(self.storage_dir, "blocks"))
        self.pending_path = os.path.join(self.storage_dir, "pending.list")
        self.clock = clock or now_utc
        self.lock = threading.Lock()
        self.by_urim = {}          # urim -> [PublishedManifest] in seq order
        self.by_hash = {}          # hash_hex -> PublishedManifest
        self.next_seq = 1
        self._load()

    def _load(self):
        for name in sorted(os.listdir(self.manifest_dir)):
            m = _MANIFEST_FILE_RE.match(name)
            if not m:
                continue
            seq, ts14, hash_hex = int(m.group(1)), m.group(2), m.group(3)
            with open(os.path.join(self.manifest_dir, name), "rb") as fh:
                body = fh.read()
            urim = json.loads(body.decode("utf-8"))["uri-m"]
            pub = PublishedManifest(seq, hash_hex, ts14, urim,
                                    to_rfc1123(from_ts14(ts14)), body)
            self._index(pub)
            self.next_seq = max(self.next_seq, seq + 1)

    def _index(self, pub: PublishedManifest):
        self.by_urim.setdefault(pub.urim, []).append(pub)
        self.by_hash[pub.hash_hex] = pub

    def pending(self) -> list:
        if not os.path.exists(self.pending_path):
            return []
        with open(self.pending_path) as fh:
            return [line.strip() for line in fh if line.strip()]

    def publish(self, man, base: str) -> tuple:
        """-> (PublishedManifest, created_now: bool)"""
        if man.id is not None or man.created is not None:
            raise InvalidManifest("submission must not carry @id or created")
        hash_hex = trusty_hash(man)
        with self.lock:
            existing = self.by_hash.get(hash_hex)
            if existing is not None:
                return existing, False
            instant = self.clock().replace(microsecond=0)
            # Clock skew between archive and publisher must not mint a
            # manifest whose created precedes its memento-datetime.
            captured = from_rfc1123(man.memento_datetime)
            if instant < captured:
                instant = captured
            ts14 = to_ts14(instant)
            man.created = to_rfc1123(instant)
            seq = self.next_seq
            self.next_seq += 1
            pub = PublishedManifest(seq, hash_hex, ts14, man.uri_m,
                                    man.created, b"")
            man.id = base + pub.trusty_path
            pub.body = canonical_bytes(man, include_publication_fields=True)
            with open(os.path.join(self.manifest_dir, pub.filename), "wb") as fh:
                fh.write(pub.body)
            with open(self.pending_path, "a") as fh:
                fh.write(pub.filename + "\n")
            self._index(pub)
        logger.info("published %s as %s", man.uri_m, pub.trusty_path)
        return pub, True

    def cut_block(self, base: str):
        """Bundle every staged manifest into a new block."""
        with self.lock:
            names = self.pending()
            if not names:
                return None
            manifests = []
            for name in names:
                with open(os.path.join(self.manifest_dir, name), "rb") as fh:
                    manifests.append(manifest_from_dict(json.loads(fh.read())))
            block = self.blocks.extend(manifests, id_uri=base + "/",
                                       created_at=to_ts14(self.clock()))
            with open(self.pending_path, "w") as fh:
                fh.truncate()
        logger.info("cut block %s with %d records", block.self_hash[:12], len(block))
        return block

    def closest(self, urim: str, wanted) -> PublishedManifest | None:
        pubs = self.by_urim.get(urim)
        if not pubs:
            return None
        return min(pubs, key=lambda p: (
            abs((from_ts14(p.ts14) - wanted).total_seconds()), p.ts14, p.seq))


class FixityHandler(BaseHTTPRequestHandler):
    server_version = SERVER_ID
    protocol_version = "HTTP/1.1"

    def version_string(self):
        # the default appends the Python runtime version
        return self.server_version

    def log_message(self, fmt, *args):
        logger.debug("fixityserver %s " + fmt, self.client_address[0], *args)

    @property
    def state(self) -> ServerState:
        return self.server.state

    @property
    def base(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{self.server.public_host or host}:{port}"

    def reply(self, status, body=b"", headers=None):
        self.send_response(status)
        for name, value in (headers or {}).items():
            self.send_header(name, value)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    def reply_json(self, status, obj):
        self.reply(status, json.dumps(obj).encode("utf-8"),
                   {"Content-Type": "application/json"})

    # ---- routing

    def do_GET(self):
        path = self.path
        if path == "/" or path == "":
            return self.serve_landing()
        if path == "/health":
            return self.reply_json(200, {"status": "ok"})
        if path == "/blocks" or path == "/blocks/":
            return self.serve_blocks_entry()
        if path.startswith("/blocks/"):
            return self.serve_block(path[len("/blocks/"):])
        if path.startswith("/manifest/"):
            return self.route_manifest(path[len("/manifest/"):])
        self.reply(404, b"not found", {"Content-Type": "text/plain"})

    do_HEAD = do_GET

    def do_POST(self):
        # drain the body up front so keep-alive connections stay in sync
        body = self.read_body()
        if self.path == "/manifest":
            return self.handle_publish(body)
        if self.path == "/blocks":
            return self.handle_cut()
        self.reply(404, b"not found", {"Content-Type": "text/plain"})

    def read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    # ---- manifests

    def handle_publish(self, body: bytes):
        try:
            man = manifest_from_dict(json.loads(body.decode("utf-8")))
            pub, created = self.state.publish(man, self.base)
        except (ValueError, InvalidManifest) as exc:
            return self.reply_json(400, {"error": str(exc)})
        self.reply_json(201 if created else 200, {
            "generic": self.base + pub.generic_path,
            "trusty": self.base + pub.trusty_path,
        })

    def route_manifest(self, rest: str):
        m = _TRUSTY_RE.match(rest)
        if m:
            return self.serve_trusty(m.group(1), m.group(2), m.group(3))
        m = _TIMEGATE_RE.match(rest)
        if m:
            return self.serve_timegate(m.group(1), m.group(2))
        return self.serve_generic(rest)

    def serve_trusty(self, ts14: str, hash_hex: str, urim: str):
        pub = self.state.by_hash.get(hash_hex)
        if pub is None or pub.ts14 != ts14 or pub.urim != urim:
            return self.reply(404, b"no such manifest", {"Content-Type": "text/plain"})
        self.reply(200, pub.body, {"Content-Type": "application/json"})

    def serve_generic(self, urim: str):
        pubs = self.state.by_urim.get(urim)
        if not pubs:
            return self.reply(404, b"no manifest for memento",
                              {"Content-Type": "text/plain"})
        newest = pubs[-1]
        self.reply(302, b"", {"Location": self.base + newest.trusty_path})

    def serve_timegate(self, prefix: str, urim: str):
        try:
            wanted = from_ts14(pad_ts(prefix))
        except Exception:
            return self.reply(400, b"bad datetime prefix",
                              {"Content-Type": "text/plain"})
        pub = self.state.closest(urim, wanted)
        if pub is None:
            return self.reply(404, b"no manifest for memento",
                              {"Content-Type": "text/plain"})
        self.reply(302, b"", {
            "Location": self.base + pub.trusty_path,
            "Vary": "accept-datetime",
        })

    # ---- blocks

    def handle_cut(self):
        try:
            block = self.state.cut_block(self.base)
        except Exception as exc:
            return self.reply_json(400, {"error": str(exc)})
        if block is None:
            return self.reply_json(400, {"error": "no manifests staged"})
        self.reply_json(201, {
            "block": f"{self.base}/blocks/{block.self_hash}",
            "hash": block.self_hash,
            "records": len(block),
        })

    def serve_blocks_entry(self):
        tip = self.state.blocks.tip()
        if tip is None:
            return self.reply(404, b"no blocks yet", {"Content-Type": "text/plain"})
        self.reply(302, b"", {"Location": f"{self.base}/blocks/{tip}"})

    def serve_block(self, ref: str):
        try:
            order = self.state.blocks.ordered_refs()
        except Exception:
            order = []
        if ref not in order:
            return self.reply(404, b"no such block", {"Content-Type": "text/plain"})
        data = self.state.blocks.fetch(ref)
        idx = order.index(ref)
        links = [f'<{self.base}/blocks/{ref}>; rel="self"']
        if idx > 0:
            links.append(f'<{self.base}/blocks/{order[idx - 1]}>; rel="prev"')
        if idx < len(order) - 1:
            links.append(f'<{self.base}/blocks/{order[idx + 1]}>; rel="next"')
        links.append(f'<{self.base}/blocks/{order[0]}>; rel="first"')
        links.append(f'<{self.base}/blocks/{order[-1]}>; rel="last"')
        self.reply(200, data, {
            "Content-Type": "application/ukvs",
            "Content-Encoding": "gzip",
            "Etag": f'"{ref}"',
            "Cache-Control": "immutable",
            "Content-Disposition": f'attachment; filename="{ref}.ukvs.gz"',
            "Link": ", ".join(links),
        })

    # ---- landing page

    def serve_landing(self):
        try:
            order = self.state.blocks.ordered_refs()
        except Exception:
            order = []
        rows = []
        for i, ref in enumerate(order, start=1):
            block = self.state.blocks.load(ref)
            rows.append(
                f"<tr><td>{i}</td><td><a href='/blocks/{ref}'>{ref}</a></td>"
                f"<td>{block.headers.created_at}</td><td>{len(block)}</td></tr>")
        manifest_count = sum(len(v) for v in self.state.by_urim.values())
        html = (
            "<!DOCTYPE html><html><head><title>Archival Fixity</title></head>"
            "<body><h1>Archival Fixity</h1>"
            f"<p>{manifest_count} published manifests, {len(order)} blocks.</p>"
            "<table><tr><th>#</th><th>block</th><th>created_at</th>"
            "<th>records</th></tr>" + "".join(rows) + "</table></body></html>")
        self.reply(200, html.encode("utf-8"), {"Content-Type": "text/html"})


class FixityServer:
    """Owns the HTTP server thread for one publication service."""

    def __init__(self, storage_dir, port: int = 0, host: str = "127.0.0.1",
                 public_host: str | None = None, clock=None):
        self.state = ServerState(storage_dir, clock=clock)
        self.httpd = ThreadingHTTPServer((host, port), FixityHandler)
        self.httpd.state = self.state
        self.httpd.public_host = public_host
        self.thread = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def base(self) -> str:
        host = self.httpd.public_host or self.httpd.server_address[0]
        return f"http://{host}:{self.port}"

    def start(self):
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()
        logger.info("fixity server listening on %s", self.base)
        return self

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        if self.thread:
            self.thread.join(timeout=5)
