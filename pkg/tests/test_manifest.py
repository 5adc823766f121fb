"""Manifest derivation: header selection, digests, canonical form, validity.

The digest rule is anchored two ways: frozen RFC test vectors for the
bare algorithms, and a coreutils pipeline (curl, md5sum, sha256sum)
recomputing a live manifest's hash field from scratch.
"""

import hashlib
import json
import shutil
import subprocess

import pytest

import helpers
from mementofix.errors import InvalidManifest, MalformedHash
from mementofix.manifest import (
    DEFAULT_CONTEXT,
    Manifest,
    canonical_bytes,
    canonical_json,
    compute_fixity,
    generate_manifest,
    load_manifest,
    manifest_from_dict,
    parse_hash,
    render_hash_constructor,
    save_manifest,
    select_headers,
    trusty_hash,
)

EMPTY_MD5 = "d41d8cd98f00b204e9800998ecf8427e"
EMPTY_SHA256 = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
ABC_MD5 = "900150983cd24fb0d6963f7d28e17f72"
ABC_SHA256 = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


# ---- digests

def test_frozen_digest_vectors():
    h = compute_fixity(b"", {})
    assert (h.md5_hex, h.sha256_hex) == (EMPTY_MD5, EMPTY_SHA256)
    h = compute_fixity(b"abc", {})
    assert (h.md5_hex, h.sha256_hex) == (ABC_MD5, ABC_SHA256)


def test_preference_applied_never_hashed():
    with_pref = compute_fixity(b"x", {"Content-Type": "text/html",
                                      "Preference-Applied": "original-content"})
    without = compute_fixity(b"x", {"Content-Type": "text/html"})
    assert str(with_pref) == str(without)


def test_hash_string_shape():
    h = compute_fixity(b"abc", {})
    assert str(h) == f"md5:{ABC_MD5} sha256:{ABC_SHA256}"
    assert parse_hash(str(h)) == h


@pytest.mark.parametrize("bad", [
    "md5:ABC sha256:def",
    "sha256:" + "0" * 64,
    "md5:" + "0" * 32,
    "md5:" + "0" * 32 + " sha256:" + "0" * 63,
    "md5:" + "G" * 32 + " sha256:" + "0" * 64,
])
def test_parse_hash_rejects_malformed(bad):
    with pytest.raises(MalformedHash):
        parse_hash(bad)


# ---- header selection

def test_select_headers_order_and_names():
    response = {
        "Server": "Apache",
        "X-ARCHIVE-ORIG-LINK": "L",
        "content-type": "text/html; charset=UTF-8",
        "x-archive-orig-date": "D",
        "X-Archive-Orig-ETag": "E",
        "Content-Length": "1234",
        "X-Archive-Orig-Last-Modified": "M",
    }
    selected = select_headers(response)
    assert list(selected.keys()) == [
        "Content-Type",
        "X-Archive-Orig-date",
        "X-Archive-Orig-etag",
        "X-Archive-Orig-last-modified",
        "X-Archive-Orig-link",
        "Preference-Applied",
    ]
    assert selected["X-Archive-Orig-etag"] == "E"
    assert selected["Preference-Applied"] == "original-links, original-content"


def test_select_headers_skips_absent():
    selected = select_headers({"Content-Type": "text/html"})
    assert list(selected.keys()) == ["Content-Type", "Preference-Applied"]


def test_render_hash_constructor_template():
    selected = select_headers({
        "Content-Type": "text/html",
        "X-Archive-Orig-Date": "D",
        "X-Archive-Orig-ETag": "E",
        "X-Archive-Orig-Last-Modified": "M",
    })
    assert render_hash_constructor(selected) == (
        "(curl -s '$uri-m' && echo -n '$Content-Type $X-Archive-Orig-date "
        "$X-Archive-Orig-etag $X-Archive-Orig-last-modified') | "
        "tee >(sha256sum) >(md5sum) >/dev/null | cut -d ' ' -f 1 | "
        "paste -d':' <(echo -e 'md5\nsha256') - | paste -d' ' - -"
    )


# ---- canonical serialization

def test_canonical_json_compact_sorted_utf8():
    assert canonical_json({"b": 1, "a": "café"}) == b'{"a":"caf\xc3\xa9","b":1}'


def test_canonical_bytes_key_order():
    man = helpers.corpus_manifest(7)
    raw = canonical_bytes(man, include_publication_fields=True).decode("utf-8")
    fields = ['"@context"', '"@id"', '"created"', '"hash"',
              '"hash-constructor"', '"http-headers"', '"memento-datetime"',
              '"uri-m"', '"uri-r"']
    positions = [raw.index(f) for f in fields]
    assert positions == sorted(positions)
    # nested object keys sort too
    assert raw.index('"Content-Type"') < raw.index('"Preference-Applied"')
    assert raw.index('"Preference-Applied"') < raw.index('"X-Archive-Orig-date"')


def test_publication_fields_toggle():
    man = helpers.corpus_manifest(3)
    with_pub = canonical_bytes(man, include_publication_fields=True)
    without = canonical_bytes(man, include_publication_fields=False)
    assert with_pub != without
    assert b'"@id"' not in without
    assert b'"created"' not in without


def test_trusty_hash_ignores_publication_fields():
    man = helpers.corpus_manifest(11)
    before = trusty_hash(man)
    man.created = None
    man.id = None
    assert trusty_hash(man) == before
    assert len(before) == 64 and all(c in "0123456789abcdef" for c in before)


def test_record_dict_keeps_created_drops_id_and_context():
    man = helpers.corpus_manifest(5)
    d = man.to_record_dict()
    assert "@id" not in d and "@context" not in d
    assert d["created"] == man.created


# ---- validation

def _valid_dict():
    return helpers.corpus_manifest(1).to_dict()


def test_manifest_from_dict_round_trip():
    man = helpers.corpus_manifest(2)
    again = manifest_from_dict(json.loads(canonical_bytes(man).decode("utf-8")))
    assert again == man


@pytest.mark.parametrize("field", ["uri-r", "uri-m", "memento-datetime",
                                   "http-headers", "hash-constructor", "hash"])
def test_manifest_from_dict_requires_fields(field):
    d = _valid_dict()
    del d[field]
    with pytest.raises(InvalidManifest):
        manifest_from_dict(d)


def test_validate_rejects_uri_mismatch():
    d = _valid_dict()
    d["uri-r"] = "http://somewhere.else.example/"
    with pytest.raises(InvalidManifest):
        manifest_from_dict(d)


def test_validate_rejects_missing_preference_applied():
    d = _valid_dict()
    d["http-headers"].pop("Preference-Applied")
    with pytest.raises(InvalidManifest):
        manifest_from_dict(d)


def test_validate_rejects_created_before_memento_datetime():
    d = _valid_dict()
    d["created"] = "Mon, 01 Jan 1990 00:00:00 GMT"
    with pytest.raises(InvalidManifest):
        manifest_from_dict(d)


def test_validate_accepts_created_equal_to_memento_datetime():
    d = _valid_dict()
    d["created"] = d["memento-datetime"]
    d.pop("@id")
    manifest_from_dict(d)


# ---- file round trip

def test_save_names_file_by_its_own_hash(tmp_path):
    man = helpers.corpus_manifest(4)
    man.created = None
    man.id = None
    path = save_manifest(man, tmp_path)
    content = open(path, "rb").read()
    stem = path.rsplit("/", 1)[1].removesuffix(".json")
    assert hashlib.sha256(content).hexdigest() == stem == trusty_hash(man)
    assert load_manifest(path) == man


# ---- live generation

def test_generate_manifest_from_live_memento(mock_archive):
    urim = helpers.seed_and_capture(
        mock_archive, "/live/a", "<html><body>hello fixity</body></html>",
        headers={"Last-Modified": "Wed, 19 Dec 2018 10:20:36 GMT",
                 "ETag": '"abc123"'})
    man = generate_manifest(urim)
    assert man.uri_m == urim
    assert man.uri_r == f"{mock_archive.base}/live/a"
    assert man.created is None and man.id is None
    assert man.context == DEFAULT_CONTEXT
    assert "X-Archive-Orig-last-modified" in man.http_headers
    assert "X-Archive-Orig-etag" in man.http_headers
    assert man.http_headers["Content-Type"].startswith("text/html")
    assert len(canonical_bytes(man)) <= 2048
    validate_manifest_ok = manifest_from_dict(man.to_dict())
    assert validate_manifest_ok.hash == man.hash


def test_generation_is_deterministic(mock_archive):
    urim = helpers.seed_and_capture(mock_archive, "/live/b", "stable bytes")
    first = generate_manifest(urim)
    serialized = canonical_bytes(first, include_publication_fields=False)
    for _ in range(2):
        again = generate_manifest(urim)
        assert again.hash == first.hash
        assert canonical_bytes(again, include_publication_fields=False) == serialized


@pytest.mark.skipif(shutil.which("curl") is None, reason="needs curl")
def test_digest_rule_against_coreutils(mock_archive, tmp_path):
    """Recompute a live manifest's digests with curl + coreutils only."""
    urim = helpers.seed_and_capture(
        mock_archive, "/live/oracle",
        "<html><body>oracle page éé</body></html>",
        headers={"Last-Modified": "Fri, 18 Oct 1996 14:07:23 GMT"})
    man = generate_manifest(urim)
    values = " ".join(v for k, v in man.http_headers.items()
                      if k != "Preference-Applied")
    body = tmp_path / "body"
    script = (
        f"curl -s '{man.uri_m}' -o '{body}' && "
        f"{{ cat '{body}'; printf '%s' '{values}'; }} | md5sum && "
        f"{{ cat '{body}'; printf '%s' '{values}'; }} | sha256sum"
    )
    out = subprocess.run(["bash", "-c", script], capture_output=True,
                         text=True, check=True,
                         env={"PATH": "/usr/bin:/bin"})
    md5_line, sha_line = out.stdout.splitlines()
    fixity = man.fixity()
    assert md5_line.split()[0] == fixity.md5_hex
    assert sha_line.split()[0] == fixity.sha256_hex


@pytest.mark.skipif(shutil.which("curl") is None, reason="needs curl")
def test_hash_constructor_command_reproduces_hash(mock_archive):
    """The manifest's own shell template recomputes its digests.

    The template's tee fan-out makes the md5/sha256 arrival order racy,
    so digests are matched by length instead of by printed label.
    """
    urim = helpers.seed_and_capture(
        mock_archive, "/live/constructor", "constructor oracle body",
        headers={"Last-Modified": "Wed, 29 May 1996 00:02:10 GMT"})
    man = generate_manifest(urim)
    cmd = man.hash_constructor.replace("$uri-m", man.uri_m)
    for name, value in man.http_headers.items():
        if name != "Preference-Applied":
            cmd = cmd.replace("$" + name, value)
    out = subprocess.run(["bash", "-c", cmd], capture_output=True, text=True,
                         check=True, env={"PATH": "/usr/bin:/bin"})
    produced = out.stdout.split()
    digests = {p.split(":", 1)[1] for p in produced}
    fixity = man.fixity()
    assert digests == {fixity.md5_hex, fixity.sha256_hex}
