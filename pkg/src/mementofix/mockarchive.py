"""In-process web archive with an on-demand save endpoint.

Stands in for public on-demand archives so the full capture, replay,
TimeMap, and TimeGate loop runs offline. Replay is bit-exact: the body
served for a URI-M is the body fetched at capture time, whatever
modifier is asked for. Two admin endpoints exist only for tests: one
seeds origin pages the archive can then capture from itself, the other
flips stored bytes to simulate silent corruption.

HTTP surface:

    POST /save?uri=<uri>            capture, following redirects
    GET  /web/<ts14><mod?>/<uri>    replay a memento
    GET  /web/<uri>                 TimeGate (Accept-Datetime)
    GET  /web/timemap/link/<uri>    TimeMap, application/link-format
    POST /admin/seed                register an origin page
    POST /admin/tamper              damage one stored byte
    GET  /health
"""

import json
import logging
import threading
from dataclasses import dataclass, field
from datetime import timedelta
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import unquote, urljoin

import requests

from .errors import CaptureFailed
from .timefmt import from_rfc1123, from_ts14, now_utc, to_ts14, ts14_to_rfc1123

logger = logging.getLogger(__name__)

SAVE_REDIRECT_DEPTH = 5

# original response headers preserved on replay, canonical replay spelling
PRESERVED = {
    "date": "X-Archive-Orig-date",
    "etag": "X-Archive-Orig-etag",
    "last-modified": "X-Archive-Orig-last-modified",
    "link": "X-Archive-Orig-link",
}


@dataclass
class Capture:
    timestamp: str               # 14 digits
    uri: str
    status: int
    body: bytes
    content_type: str | None
    content_encoding: str | None
    location: str | None         # rewritten to the archived target
    orig_headers: dict


@dataclass
class SeededPage:
    body: bytes
    status: int = 200
    content_type: str = "text/html"
    headers: dict = field(default_factory=dict)
    location: str | None = None


class ArchiveState:
    """Append-only capture store with serialized timestamp allocation."""

    def __init__(self):
        self.lock = threading.Lock()
        self.captures = {}           # uri -> [Capture] in capture order
        self.seeded = {}             # path -> SeededPage
        self.last_instant = {}       # uri -> datetime of newest capture
        self.session = requests.Session()

    def allocate_timestamp(self, uri: str) -> str:
        # Distinct URIs may share a second; recaptures of the same URI must
        # not, or the two mementos would collapse into one URI-M.
        with self.lock:
            instant = now_utc().replace(microsecond=0)
            last = self.last_instant.get(uri)
            if last is not None and instant <= last:
                instant = last + timedelta(seconds=1)
            self.last_instant[uri] = instant
            return to_ts14(instant)

    def add(self, capture: Capture):
        with self.lock:
            self.captures.setdefault(capture.uri, []).append(capture)

    def find(self, uri: str, timestamp: str) -> Capture | None:
        for cap in self.captures.get(uri, ()):
            if cap.timestamp == timestamp:
                return cap
        return None


class MockArchiveHandler(BaseHTTPRequestHandler):
    server_version = "MockArchive/0.1"
    protocol_version = "HTTP/1.1"

    def version_string(self):
        return self.server_version

    # ---- plumbing

    def log_message(self, fmt, *args):
        logger.debug("mockarchive %s " + fmt, self.client_address[0], *args)

    @property
    def state(self) -> ArchiveState:
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

    def read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    # ---- routing

    def do_GET(self):
        path = self.path
        if path == "/health":
            return self.reply_json(200, {"status": "ok"})
        if path.startswith("/web/timemap/link/"):
            return self.serve_timemap(path[len("/web/timemap/link/"):])
        if path.startswith("/web/"):
            return self.serve_web(path[len("/web/"):])
        page = self.state.seeded.get(path)
        if page is not None:
            return self.serve_seeded(page)
        self.reply(404, b"not found", {"Content-Type": "text/plain"})

    do_HEAD = do_GET

    def do_POST(self):
        # drain the body up front so keep-alive connections stay in sync
        body = self.read_body()
        if self.path.startswith("/save?uri="):
            return self.handle_save(unquote(self.path[len("/save?uri="):]))
        if self.path == "/admin/seed":
            return self.handle_seed(body)
        if self.path == "/admin/tamper":
            return self.handle_tamper(body)
        self.reply(404, b"not found", {"Content-Type": "text/plain"})

    # ---- origin pages

    def serve_seeded(self, page: SeededPage):
        headers = {"Content-Type": page.content_type}
        headers.update(page.headers)
        if page.location:
            headers["Location"] = page.location
        self.reply(page.status, page.body, headers)

    def handle_seed(self, body: bytes):
        req = json.loads(body.decode("utf-8"))
        content = req.get("body", "")
        page = SeededPage(
            body=content.encode("utf-8") if isinstance(content, str) else bytes(content),
            status=int(req.get("status", 200)),
            content_type=req.get("content_type", "text/html"),
            headers=dict(req.get("headers", {})),
            location=req.get("location"),
        )
        path = req["path"]
        with self.state.lock:
            self.state.seeded[path] = page
        self.reply_json(200, {"uri": self.base + path})

    # ---- capture

    def handle_save(self, uri: str):
        try:
            chain = self.capture_chain(uri, SAVE_REDIRECT_DEPTH)
        except Exception as exc:
            return self.reply_json(502, {"error": f"capture failed: {exc}"})
        first = chain[0]
        urim = f"{self.base}/web/{first.timestamp}/{first.uri}"
        self.reply_json(200, {
            "urim": urim,
            "resources_created": len(chain),
            "timestamp": first.timestamp,
        })

    def capture_chain(self, uri: str, depth: int) -> list:
        """Fetch uri without following redirects; archive each hop.

        The stored Location of an archived redirect points at the
        archived copy of its target, so replay walks archived hops.
        """
        resp = self.state.session.get(uri, allow_redirects=False, stream=True, timeout=30)
        try:
            body = resp.raw.read(decode_content=False)
        finally:
            resp.close()
        if resp.status_code >= 400:
            raise CaptureFailed(f"origin returned HTTP {resp.status_code} for {uri}")
        timestamp = self.state.allocate_timestamp(uri)
        orig = {}
        for lower, preserved_name in PRESERVED.items():
            if lower in resp.headers:
                orig[preserved_name] = resp.headers[lower]
        location = resp.headers.get("Location")
        chain = []
        archived_location = None
        if location and resp.status_code in (301, 302, 303, 307, 308) and depth > 0:
            target = urljoin(uri, location)
            tail = self.capture_chain(target, depth - 1)
            archived_location = f"{self.base}/web/{tail[0].timestamp}/{tail[0].uri}"
            chain = tail
        capture = Capture(
            timestamp=timestamp,
            uri=uri,
            status=resp.status_code,
            body=body,
            content_type=resp.headers.get("Content-Type"),
            content_encoding=resp.headers.get("Content-Encoding"),
            location=archived_location,
            orig_headers=orig,
        )
        self.state.add(capture)
        return [capture] + chain

    # ---- replay

    def serve_web(self, rest: str):
        timestamp, _, uri = rest.partition("/")
        if len(timestamp) >= 14 and timestamp[:14].isdigit():
            modifier = timestamp[14:]
            timestamp = timestamp[:14]
            if modifier and not modifier.endswith("_"):
                return self.reply(404, b"bad modifier", {"Content-Type": "text/plain"})
            return self.serve_memento(timestamp, uri)
        return self.serve_timegate(rest)

    def serve_memento(self, timestamp: str, uri: str):
        cap = self.state.find(uri, timestamp)
        if cap is None:
            return self.reply(404, b"no capture", {"Content-Type": "text/plain"})
        headers = {
            "Memento-Datetime": ts14_to_rfc1123(cap.timestamp),
            "Link": (f'<{cap.uri}>; rel="original", '
                     f'<{self.base}/web/timemap/link/{cap.uri}>; rel="timemap"'),
        }
        if cap.content_type:
            headers["Content-Type"] = cap.content_type
        if cap.content_encoding:
            headers["Content-Encoding"] = cap.content_encoding
        if cap.location:
            headers["Location"] = cap.location
        headers.update(cap.orig_headers)
        self.reply(cap.status, cap.body, headers)

    def serve_timegate(self, uri: str):
        captures = self.state.captures.get(uri)
        if not captures:
            return self.reply(404, b"no captures", {"Content-Type": "text/plain"})
        accept = self.headers.get("Accept-Datetime")
        if accept:
            try:
                wanted = from_rfc1123(accept)
            except Exception:
                return self.reply(400, b"bad Accept-Datetime",
                                  {"Content-Type": "text/plain"})
            ordered = sorted(captures, key=lambda c: c.timestamp)
            chosen = min(ordered, key=lambda c: (
                abs((from_ts14(c.timestamp) - wanted).total_seconds()),
                c.timestamp))
        else:
            chosen = max(captures, key=lambda c: c.timestamp)
        target = f"{self.base}/web/{chosen.timestamp}/{uri}"
        self.reply(302, b"", {
            "Location": target,
            "Vary": "accept-datetime",
            "Link": f'<{uri}>; rel="original"',
        })

    def serve_timemap(self, uri: str):
        captures = self.state.captures.get(uri)
        if not captures:
            return self.reply(404, b"no captures", {"Content-Type": "text/plain"})
        ordered = sorted(captures, key=lambda c: c.timestamp)
        lines = [
            f'<{uri}>; rel="original"',
            (f'<{self.base}/web/timemap/link/{uri}>; rel="self"; '
             f'type="application/link-format"; '
             f'from="{ts14_to_rfc1123(ordered[0].timestamp)}"'),
            f'<{self.base}/web>; rel="timegate"',
        ]
        for i, cap in enumerate(ordered):
            if len(ordered) == 1:
                rel = "first memento"
            elif i == 0:
                rel = "first memento"
            elif i == len(ordered) - 1:
                rel = "last memento"
            else:
                rel = "memento"
            lines.append(
                f'<{self.base}/web/{cap.timestamp}/{cap.uri}>; rel="{rel}"; '
                f'datetime="{ts14_to_rfc1123(cap.timestamp)}"')
        body = ",\n".join(lines) + "\n"
        self.reply(200, body.encode("utf-8"),
                   {"Content-Type": "application/link-format"})

    # ---- tampering

    def handle_tamper(self, body: bytes):
        req = json.loads(body.decode("utf-8"))
        urim = req["urim"]
        prefix = f"{self.base}/web/"
        rest = urim[len(prefix):] if urim.startswith(prefix) else urim
        timestamp, _, uri = rest.partition("/")
        timestamp = timestamp[:14]
        cap = self.state.find(uri, timestamp)
        if cap is None:
            return self.reply_json(404, {"error": f"no capture for {urim}"})
        if not cap.body:
            return self.reply_json(400, {"error": "empty body"})
        offset = int(req["byte_offset"]) % len(cap.body)
        old = cap.body[offset]
        new = int(req.get("new_value", (old + 1) % 256)) % 256
        if new == old:
            new = (old + 1) % 256
        with self.state.lock:
            data = bytearray(cap.body)
            data[offset] = new
            cap.body = bytes(data)
        logger.info("tampered %s at offset %d (%d -> %d)", urim, offset, old, new)
        self.reply_json(200, {"urim": urim, "byte_offset": offset,
                              "old": old, "new": new})


class MockArchive:
    """Owns the HTTP server thread for one archive instance."""

    def __init__(self, port: int = 0, host: str = "127.0.0.1",
                 public_host: str | None = None):
        self.state = ArchiveState()
        self.httpd = ThreadingHTTPServer((host, port), MockArchiveHandler)
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
        logger.info("mock archive listening on %s", self.base)
        return self

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        if self.thread:
            self.thread.join(timeout=5)


def main(argv=None):
    import argparse

    parser = argparse.ArgumentParser(description="run a mock web archive")
    parser.add_argument("--port", type=int, default=9099)
    parser.add_argument("--host", default="127.0.0.1")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    archive = MockArchive(port=args.port, host=args.host).start()
    try:
        archive.thread.join()
    except KeyboardInterrupt:
        archive.stop()


if __name__ == "__main__":
    main()
