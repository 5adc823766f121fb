"""Command line interface.

    generate-atomic      derive a manifest file for one memento
    publish-atomic       publish a manifest file to the server
    disseminate-atomic   push a generic manifest URI into archives
    disseminate-block    push the block entrypoint into archives
    generate-blocks      bundle many mementos into chained blocks
    verify-atomic        verify mementos against published manifests
    verify-block         verify mementos against the block chain
    serve                run the publication server
    mock-archive         run a mock web archive

Exit codes: 0 all verified / success, 2 at least one memento Failed,
1 infrastructure or usage error.
"""

import argparse
import logging
import os
import sys
import time

import requests

from .blocks import BlockStore, block_filename
from .chain import open_chain_source
from .config import load_config
from .errors import MementofixError
from .gateway import ArchiveEndpoint, Gateway, failures, successes
from .httpclient import FetchClient
from .manifest import generate_manifest, load_manifest, save_manifest
from .memento import MementoClient
from .verifier import (FAILED, VERIFIED, VerificationReport, Verifier,
                       compare_fixity, render_json, render_table)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INFRA = 1
EXIT_FAILED_VERIFICATION = 2


def _millis() -> int:
    return int(time.time() * 1000)


def _log(msg: str):
    print(f"[{_millis()}] {msg}", flush=True)


def _endpoints(config) -> list:
    return [ArchiveEndpoint.for_mock(base) for base in config.endpoints]


def _read_urims(args_urims: list) -> list:
    """Positional arguments are URI-Ms, or files containing one per line."""
    urims = []
    for item in args_urims:
        if os.path.exists(item) and not item.startswith("http"):
            with open(item) as fh:
                urims.extend(line.strip() for line in fh if line.strip())
        else:
            urims.append(item)
    return urims


# ---- commands

def cmd_generate_atomic(args, config):
    man = generate_manifest(args.urim, client=MementoClient(FetchClient()))
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    path = save_manifest(man, out_dir)
    print(path)
    return EXIT_OK


def cmd_publish_atomic(args, config):
    man = load_manifest(args.manifest_file)
    body = man.to_dict(include_publication_fields=False)
    resp = requests.post(f"{config.server_base.rstrip('/')}/manifest",
                         json=body, timeout=60)
    if resp.status_code not in (200, 201):
        print(f"server rejected manifest: HTTP {resp.status_code} {resp.text}",
              file=sys.stderr)
        return EXIT_INFRA
    published = resp.json()
    print(published["generic"])
    print(published["trusty"])
    return EXIT_OK


def cmd_disseminate(args, config):
    gateway = Gateway(_endpoints(config), delay=config.delay)
    results = gateway.disseminate(args.uri)
    for receipt in successes(results):
        print(receipt.resulting_urim)
    for failure in failures(results):
        print(f"failed: {failure}", file=sys.stderr)
    if not successes(results):
        return EXIT_INFRA
    return EXIT_OK


def cmd_generate_blocks(args, config):
    urims = _read_urims([args.urim_list])
    if not urims:
        print("no URI-Ms to process", file=sys.stderr)
        return EXIT_INFRA
    store = BlockStore(config.storage_dir)
    client = MementoClient(FetchClient())
    size = config.block_size
    total = -(-len(urims) // size)
    server = config.server_base.rstrip("/")
    for number in range(1, total + 1):
        batch = urims[(number - 1) * size:number * size]
        started = time.monotonic()
        _log(f"Generating block {number}")
        manifests = [generate_manifest(u, client=client) for u in batch]
        if args.publish:
            for man in manifests:
                resp = requests.post(f"{server}/manifest",
                                     json=man.to_dict(include_publication_fields=False),
                                     timeout=60)
                if resp.status_code not in (200, 201):
                    print(f"publish failed: HTTP {resp.status_code}", file=sys.stderr)
                    return EXIT_INFRA
            resp = requests.post(f"{server}/blocks", timeout=60)
            if resp.status_code != 201:
                print(f"block cut failed: HTTP {resp.status_code}", file=sys.stderr)
                return EXIT_INFRA
            cut = resp.json()
            _log(f"Finished creating block {number} ({cut['block']}) in "
                 f"{int((time.monotonic() - started) * 1000)} milliseconds")
        else:
            block = store.extend(manifests, id_uri=server + "/")
            plain = os.path.join(store.directory, block_filename(block))
            _log(f"Saving {len(block.raw)} bytes to {plain}")
            gz_path = plain + ".gz"
            _log(f"Compressing block to {gz_path}")
            gz_size = os.path.getsize(gz_path)
            _log(f"Finished creating block {number} of size {gz_size} bytes in "
                 f"{int((time.monotonic() - started) * 1000)} milliseconds")
        print("=" * 22)
    return EXIT_OK


def _finish_verification(reports, as_json: bool) -> int:
    print(render_json(reports) if as_json else render_table(reports))
    if any(not r.verified for r in reports):
        return EXIT_FAILED_VERIFICATION
    return EXIT_OK


def cmd_verify_atomic(args, config):
    verifier = Verifier()
    endpoints = _endpoints(config)
    reports = []
    for target in args.urims:
        if os.path.exists(target) and not target.startswith("http"):
            with open(target) as fh:
                head = fh.read(1)
            if head == "{":
                reports.append(_verify_manifest_file(target, verifier))
                continue
            for urim in _read_urims([target]):
                reports.extend(verifier.verify_atomic_batch(
                    [urim], config.server_base, endpoints))
        else:
            reports.extend(verifier.verify_atomic_batch(
                [target], config.server_base, endpoints))
    if not reports:
        print("nothing to verify", file=sys.stderr)
        return EXIT_INFRA
    return _finish_verification(reports, args.json)


def _verify_manifest_file(path: str, verifier: Verifier) -> VerificationReport:
    """Offline comparison against a local manifest file."""
    man = load_manifest(path)
    report = VerificationReport(urim=man.uri_m, status=FAILED)
    try:
        current = generate_manifest(man.uri_m, client=verifier.memento_client)
        report.current_hash = current.hash
        if compare_fixity(current.hash, man.hash):
            report.matched.append(path)
            report.status = VERIFIED
        else:
            report.mismatched.append(path)
            report.diagnostic = "fixity mismatch"
    except MementofixError as exc:
        report.diagnostic = str(exc)
    return report


def cmd_verify_block(args, config):
    targets = _read_urims(args.urims)
    if not targets:
        print("nothing to verify", file=sys.stderr)
        return EXIT_INFRA
    location = args.chain or f"{config.server_base.rstrip('/')}/blocks"
    verifier = Verifier()
    source = open_chain_source(location, verifier.client)
    reports = verifier.verify_block_batch(targets, source)
    return _finish_verification(reports, args.json)


def cmd_serve(args, config):
    from .server import FixityServer

    try:
        server = FixityServer(config.storage_dir, port=args.port, host=args.host)
    except OSError as exc:
        print(f"cannot bind: {exc}", file=sys.stderr)
        return EXIT_INFRA
    server.start()
    print(f"serving on {server.base}", flush=True)
    try:
        server.thread.join()
    except KeyboardInterrupt:
        server.stop()
    return EXIT_OK


def cmd_mock_archive(args, config):
    from .mockarchive import MockArchive

    try:
        archive = MockArchive(port=args.port, host=args.host)
    except OSError as exc:
        print(f"cannot bind: {exc}", file=sys.stderr)
        return EXIT_INFRA
    archive.start()
    print(f"archiving on {archive.base}", flush=True)
    try:
        archive.thread.join()
    except KeyboardInterrupt:
        archive.stop()
    return EXIT_OK


# ---- argument wiring

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mementofix",
        description="establish and verify fixity of archived web pages")
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--server", dest="server_base", help="publication server base URL")
    parser.add_argument("--endpoints", help="comma separated archive base URLs")
    parser.add_argument("--block-size", type=int, dest="block_size")
    parser.add_argument("--storage", dest="storage_dir")
    parser.add_argument("--delay", type=float, help="per-archive politeness delay, seconds")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-atomic", help="derive a manifest for one memento")
    p.add_argument("urim")
    p.add_argument("--out", help="directory for the manifest file")
    p.set_defaults(func=cmd_generate_atomic)

    p = sub.add_parser("publish-atomic", help="publish a manifest file")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_publish_atomic)

    p = sub.add_parser("disseminate-atomic", help="push a manifest URI into archives")
    p.add_argument("uri")
    p.set_defaults(func=cmd_disseminate)

    p = sub.add_parser("disseminate-block", help="push the block entrypoint into archives")
    p.add_argument("uri")
    p.set_defaults(func=cmd_disseminate)

    p = sub.add_parser("generate-blocks", help="bundle mementos into chained blocks")
    p.add_argument("urim_list", help="file with one URI-M per line")
    p.add_argument("--publish", action="store_true",
                   help="publish manifests and cut blocks on the server "
                        "instead of writing local files")
    p.set_defaults(func=cmd_generate_blocks)

    p = sub.add_parser("verify-atomic", help="verify against published manifests")
    p.add_argument("urims", nargs="+",
                   help="URI-Ms, manifest files, or files listing URI-Ms")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify_atomic)

    p = sub.add_parser("verify-block", help="verify against the block chain")
    p.add_argument("urims", nargs="+", help="URI-Ms or files listing URI-Ms")
    p.add_argument("--chain", help="blocks entry URL or local block directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify_block)

    p = sub.add_parser("serve", help="run the publication server")
    p.add_argument("--port", type=int, default=9000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("mock-archive", help="run a mock web archive")
    p.add_argument("--port", type=int, default=9099)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_mock_archive)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s")
    overrides = {
        "server_base": args.server_base,
        "endpoints": args.endpoints,
        "block_size": args.block_size,
        "storage_dir": args.storage_dir,
        "delay": args.delay,
    }
    try:
        config = load_config(args.config, overrides=overrides)
        return args.func(args, config)
    except MementofixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFRA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFRA


if __name__ == "__main__":
    sys.exit(main())
