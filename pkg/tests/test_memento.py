"""URI-M parsing, raw modifiers, and link-format TimeMaps."""

import pytest

from mementofix.errors import MalformedUriM
from mementofix.memento import (
    format_urim,
    mementos_of,
    parse_link_format,
    parse_urim,
    to_raw_urim,
)

URIM = "https://web.archive.org/web/20181219102034/https://2019.jcdl.org/"


def test_parse_urim_splits_components():
    m = parse_urim(URIM)
    assert m.base == "https://web.archive.org/web/"
    assert m.timestamp == "20181219102034"
    assert m.modifier == ""
    assert m.original == "https://2019.jcdl.org/"
    assert m.urim == URIM


def test_parse_urim_with_modifier():
    m = parse_urim("https://web.archive.org/web/20181219102034id_/https://2019.jcdl.org/")
    assert m.modifier == "id_"
    assert m.original == "https://2019.jcdl.org/"


def test_parse_urim_keeps_query_and_port():
    m = parse_urim("http://127.0.0.1:8080/web/20170405123456/http://h.example:9999/p?b=2&a=1")
    assert m.base == "http://127.0.0.1:8080/web/"
    assert m.original == "http://h.example:9999/p?b=2&a=1"


def test_parse_urim_anchors_on_first_timestamp():
    # The embedded original may itself contain a 14-digit capture path.
    nested = "https://a.example/web/20181219102034/https://b.example/web/20001122334455/http://c.example/"
    m = parse_urim(nested)
    assert m.timestamp == "20181219102034"
    assert m.original == "https://b.example/web/20001122334455/http://c.example/"


@pytest.mark.parametrize("bad", [
    "https://web.archive.org/web/2018/https://2019.jcdl.org/",
    "https://web.archive.org/web/20181219102034/relative/path",
    "not a uri at all",
    "https://web.archive.org/web/20181219102034",
])
def test_parse_urim_rejects_malformed(bad):
    with pytest.raises(MalformedUriM):
        parse_urim(bad)


def test_format_round_trip():
    urim = format_urim("https://web.archive.org/web/", "20181219102034",
                       "https://2019.jcdl.org/")
    assert urim == URIM
    assert parse_urim(urim).urim == urim


def test_to_raw_urim_inserts_modifier():
    raw = to_raw_urim(URIM)
    assert raw == "https://web.archive.org/web/20181219102034id_/https://2019.jcdl.org/"
    # already-raw input stays raw
    assert to_raw_urim(raw) == raw


TIMEMAP = """\
<http://a.example/page>; rel="original",
<http://arc.example/web/timemap/link/http://a.example/page>; rel="self"; type="application/link-format",
<http://arc.example/web/http://a.example/page>; rel="timegate",
<http://arc.example/web/19961022175434/http://a.example/page>; rel="first memento"; datetime="Tue, 22 Oct 1996 17:54:34 GMT",
<http://arc.example/web/20181219102034/http://a.example/page>; rel="memento"; datetime="Wed, 19 Dec 2018 10:20:34 GMT",
<http://arc.example/web/20181223114355/http://a.example/page>; rel="last memento"; datetime="Sun, 23 Dec 2018 11:43:55 GMT"
"""


def test_parse_link_format_entries():
    entries = parse_link_format(TIMEMAP)
    assert len(entries) == 6
    rels = [e.rel for e in entries]
    assert rels == ["original", "self", "timegate", "first memento",
                    "memento", "last memento"]
    assert entries[0].uri == "http://a.example/page"
    assert entries[3].datetime == "Tue, 22 Oct 1996 17:54:34 GMT"
    assert entries[3].ts14 == "19961022175434"
    assert entries[2].datetime is None


def test_mementos_of_keeps_only_mementos():
    entries = parse_link_format(TIMEMAP)
    kept = mementos_of(entries)
    assert [e.ts14 for e in kept] == ["19961022175434", "20181219102034",
                                      "20181223114355"]


def test_parse_link_format_tolerates_commas_inside_quotes():
    text = '<http://x.example/a>; rel="memento"; datetime="Mon, 01 Jan 2001 00:00:00 GMT"'
    entries = parse_link_format(text)
    assert len(entries) == 1
    assert entries[0].datetime == "Mon, 01 Jan 2001 00:00:00 GMT"
