"""Sort-friendly URI Reordering Transform.

Reversing the host labels makes byte-ordered keys group by registered
domain, then subdomain:

    https://web.archive.org/web/19961022175434/http://search.com/
    -> org,archive,web)/web/19961022175434/http://search.com/

The portion after ")" is kept verbatim, so a URI-M key embeds its
original URI untransformed. Archival tooling in the wild is not
consistent about the embedded part (www and default port sometimes
stripped, "://" sometimes collapsed to ":/" with the trailing slash
dropped), so lookups probe those variants too.
"""

import re
from urllib.parse import urlsplit

from .errors import MalformedUri
from .memento import format_urim, parse_urim

DEFAULT_PORTS = {"http": 80, "https": 443}


def to_surt(uri: str, sort_query: bool = True) -> str:
    parts = urlsplit(uri)
    if parts.scheme not in DEFAULT_PORTS:
        raise MalformedUri(f"not an absolute http(s) URI: {uri}")
    if not parts.hostname:
        raise MalformedUri(f"no host in {uri}")
    host = parts.hostname.lower().rstrip(".")
    key = ",".join(reversed(host.split(".")))
    if parts.port is not None and parts.port != DEFAULT_PORTS[parts.scheme]:
        key += f":{parts.port}"
    path = parts.path or "/"
    query = parts.query
    if query and sort_query:
        query = "&".join(sorted(query.split("&")))
    if query:
        path += "?" + query
    return key + ")" + path


def _embedded_variants(original: str):
    """Alternate spellings of a URI-M's embedded original URI."""
    yield original
    m = re.match(r"^(https?)://([^/:]+)(:\d+)?(/.*)?$", original)
    if m:
        scheme, host, port, rest = m.group(1), m.group(2), m.group(3) or "", m.group(4) or "/"
        bare = re.sub(r"^www\d*\.", "", host)
        keep_port = port if port not in (":80", ":443") else ""
        if bare != host or port != keep_port:
            yield f"{scheme}://{bare}{keep_port}{rest}"
    # collapsed scheme separator, trailing slash dropped
    collapsed = original.replace("://", ":/", 1)
    if collapsed.endswith("/"):
        collapsed = collapsed[:-1]
    yield collapsed


def lookup_variants(uri: str) -> list:
    """Candidate SurtKeys for a probe URI, canonical form first.

    Non-URI-M input gets only its canonical key.
    """
    keys = [to_surt(uri)]
    try:
        parsed = parse_urim(uri)
    except Exception:
        return keys
    for alt in _embedded_variants(parsed.original):
        variant = to_surt(format_urim(parsed.base, parsed.timestamp, alt))
        if variant not in keys:
            keys.append(variant)
    return keys
