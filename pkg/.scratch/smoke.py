"""End-to-end smoke: seed, capture, publish, disseminate, verify both ways."""
import json
import sys
import tempfile

import requests

from mementofix.chain import HttpChainSource
from mementofix.gateway import ArchiveEndpoint, Gateway, successes
from mementofix.manifest import generate_manifest, trusty_hash
from mementofix.mockarchive import MockArchive
from mementofix.server import FixityServer
from mementofix.verifier import Verifier, render_table

home = MockArchive().start()
ep1 = MockArchive().start()
ep2 = MockArchive().start()
storage = tempfile.mkdtemp()
server = FixityServer(storage).start()

print("home:", home.base, "server:", server.base)

# seed 3 origin pages on the home archive and capture them
urims = []
for i in range(3):
    requests.post(f"{home.base}/admin/seed", json={
        "path": f"/static/page{i}",
        "body": f"<html><body>page {i} content</body></html>",
        "content_type": "text/html; charset=UTF-8",
        "headers": {"Last-Modified": "Wed, 19 Dec 2018 10:20:36 GMT"},
    }, timeout=10).raise_for_status()
    r = requests.post(f"{home.base}/save?uri={home.base}/static/page{i}", timeout=10)
    r.raise_for_status()
    urims.append(r.json()["urim"])
print("captured:", urims)

# generate + publish manifests
generics = []
for urim in urims:
    man = generate_manifest(urim)
    assert man.hash.startswith("md5:"), man.hash
    r = requests.post(f"{server.base}/manifest",
                      json=man.to_dict(include_publication_fields=False), timeout=10)
    assert r.status_code == 201, (r.status_code, r.text)
    pub = r.json()
    generics.append(pub["generic"])
    # trusty round trip
    t = requests.get(pub["trusty"], timeout=10)
    assert t.status_code == 200
    body = json.loads(t.content)
    h = pub["trusty"].split("/manifest/")[1].split("/")[1]
    body.pop("@id"); body.pop("created")
    from mementofix.manifest import manifest_from_dict
    assert trusty_hash(manifest_from_dict(body | {"@context": body.get("@context")})) == h
    g = requests.get(pub["generic"], allow_redirects=False, timeout=10)
    assert g.status_code == 302 and g.headers["Location"] == pub["trusty"], g.headers

print("published ok")

# disseminate generics to both endpoint archives
gw = Gateway([ArchiveEndpoint.for_mock(ep1.base), ArchiveEndpoint.for_mock(ep2.base)], delay=0)
for g in generics:
    res = gw.disseminate(g)
    assert len(successes(res)) == 2, res
print("disseminated, receipts:", gw.success_count)

# cut a block
r = requests.post(f"{server.base}/blocks", timeout=10)
assert r.status_code == 201, r.text
print("block:", r.json())

# verify both ways
v = Verifier()
eps = [ArchiveEndpoint.for_mock(ep1.base), ArchiveEndpoint.for_mock(ep2.base)]
reports = v.verify_atomic_batch(urims, server.base, eps)
print(render_table(reports))
assert all(r.verified for r in reports), [r.diagnostic for r in reports]
for r in reports:
    assert len(r.matched) >= 3, (r.matched, r.excluded, r.mismatched)

source = HttpChainSource(f"{server.base}/blocks", v.client)
reports = v.verify_block_batch(urims, source)
print(render_table(reports))
assert all(r.verified for r in reports), [(r.diagnostic, r.mismatched) for r in reports]
assert all(r.block_index == 1 for r in reports)

# tamper one memento, both verifiers must fail it
r = requests.post(f"{home.base}/admin/tamper",
                  json={"urim": urims[1], "byte_offset": 7}, timeout=10)
print("tamper:", r.json())
rep = v.verify_atomic(urims[1], server.base, eps)
assert not rep.verified and rep.mismatched, rep
rep = v.verify_block(urims[1], source)
assert not rep.verified and rep.mismatched, rep
print("tamper detected by both verifiers")

# restart server from disk, resolutions preserved
server.stop()
server2 = FixityServer(storage).start()
g = requests.get(generics[0].replace(server.base, server2.base),
                 allow_redirects=False, timeout=10)
assert g.status_code == 302, g.status_code
print("restart ok")
for s in (home, ep1, ep2, server2):
    s.stop()
print("SMOKE PASSED")
