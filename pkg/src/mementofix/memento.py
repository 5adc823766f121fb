"""Memento (archived web page) addressing and retrieval.

Archived copies live at URI-Ms of the shape

    <archive base>/web/<14 digit timestamp><modifier?>/<original uri>

where the optional modifier selects a rendering; the ``id_`` modifier
asks for the unaltered original bytes. TimeMaps enumerate the copies an
archive holds for one original URI, and TimeGates content-negotiate on
datetime.
"""

import logging
import re
from dataclasses import dataclass

from .errors import MalformedUriM, ParseError
from .httpclient import FetchClient
from .timefmt import from_rfc1123, to_ts14

logger = logging.getLogger(__name__)

RAW_MODIFIER = "id_"

# Base is matched non-greedily so the first /<14 digits>/ segment splits
# the URI; the embedded original URI may itself contain such segments.
_URIM_RE = re.compile(
    r"^(?P<base>.+?/)(?P<ts>\d{14})(?P<mod>[a-z][a-z0-9]*_)?/(?P<orig>[a-zA-Z][a-zA-Z0-9+.\-]*:.+)$"
)


@dataclass
class MementoUri:
    """Decomposed URI-M."""

    base: str           # everything up to and including the slash before the timestamp
    timestamp: str      # 14 digit capture instant
    modifier: str       # "" or e.g. "id_"
    original: str       # the archived URI-R

    @property
    def urim(self) -> str:
        return f"{self.base}{self.timestamp}{self.modifier}/{self.original}"

    def with_modifier(self, modifier: str) -> "MementoUri":
        return MementoUri(self.base, self.timestamp, modifier, self.original)


def parse_urim(urim: str) -> MementoUri:
    m = _URIM_RE.match(urim)
    if not m:
        raise MalformedUriM(f"not a recognizable URI-M: {urim}")
    return MementoUri(m.group("base"), m.group("ts"), m.group("mod") or "", m.group("orig"))


def format_urim(base: str, timestamp: str, original: str, modifier: str = "") -> str:
    if not base.endswith("/"):
        base += "/"
    return f"{base}{timestamp}{modifier}/{original}"


def to_raw_urim(urim: str, raw_modifier: str = RAW_MODIFIER) -> str:
    """Rewrite a URI-M to request the unaltered archived bytes."""
    return parse_urim(urim).with_modifier(raw_modifier).urim


@dataclass
class TimeMapEntry:
    uri: str
    rel: str
    datetime: str | None = None   # RFC 1123 as served

    @property
    def ts14(self) -> str | None:
        if self.datetime is None:
            return None
        return to_ts14(from_rfc1123(self.datetime))


def parse_link_format(text: str) -> list:
    """Parse an application/link-format TimeMap into entries.

    Entries are comma separated, but attribute values (datetimes) also
    contain commas, so splitting tracks quoting state.
    """
    entries = []
    for chunk in _split_toplevel(text):
        chunk = chunk.strip()
        if not chunk:
            continue
        m = re.match(r"<([^>]*)>\s*(.*)", chunk, re.DOTALL)
        if not m:
            raise ParseError(f"bad link-format entry: {chunk[:80]!r}")
        uri, rest = m.group(1), m.group(2)
        attrs = dict(re.findall(r';\s*([A-Za-z\-]+)="([^"]*)"', rest))
        rel = attrs.get("rel", "")
        entries.append(TimeMapEntry(uri, rel, attrs.get("datetime")))
    return entries


def _split_toplevel(text: str):
    parts, depth, quoted, start = [], 0, False, 0
    for i, ch in enumerate(text):
        if ch == '"':
            quoted = not quoted
        elif not quoted:
            if ch == "<":
                depth += 1
            elif ch == ">":
                depth -= 1
            elif ch == "," and depth == 0:
                parts.append(text[start:i])
                start = i + 1
    parts.append(text[start:])
    return parts


def mementos_of(entries: list) -> list:
    """Entries whose rel marks them as mementos, in document order."""
    return [e for e in entries if "memento" in e.rel.split()]


class MementoClient:
    """Retrieval operations against a memento-serving archive."""

    def __init__(self, client: FetchClient | None = None):
        self.client = client or FetchClient()

    def fetch_raw(self, urim: str, raw_modifier: str = RAW_MODIFIER):
        """GET the unaltered archived bytes for a URI-M.

        Returns (body, headers, final_url). The raw modifier is applied
        on top of whatever modifier the URI-M carries.
        """
        raw = to_raw_urim(urim, raw_modifier)
        logger.debug("fetching raw memento %s", raw)
        result = self.client.fetch(raw, require_ok=True)
        return result.body, result.headers, result.url

    def fetch_timemap(self, urit: str) -> list:
        result = self.client.fetch(urit, require_ok=True)
        return parse_link_format(result.body.decode("utf-8"))

    def negotiate(self, urig: str, accept_datetime: str):
        """Resolve a TimeGate with an Accept-Datetime header.

        Returns the FetchResult of the selected memento; the redirect
        hops carry the negotiated URI-M.
        """
        return self.client.fetch(urig, headers={"Accept-Datetime": accept_datetime})
