"""Establish and verify fixity of archived web pages.

Two dissemination schemes share one manifest format. The atomic scheme
publishes each memento's manifest as its own trusty-URI resource and
pushes that into several archives; the block scheme bundles manifests
into sorted, content-addressed, chained files that are cheap to
archive, replicate, and search.
"""

from .errors import (BrokenChain, CaptureFailed, DuplicateLine,
                     GenerationFailed, HttpError, InvalidManifest,
                     MalformedHash, MalformedUri, MalformedUriM,
                     MementofixError, NoManifestFound, NoRecordFound,
                     NotSorted, ParseError, SubmissionFailed, TamperDetected,
                     Timeout)
from .manifest import (FixityHash, Manifest, canonical_bytes, compute_fixity,
                       generate_manifest, load_manifest, manifest_from_dict,
                       render_hash_constructor, save_manifest, select_headers,
                       trusty_hash)
from .blocks import (BlockStore, FixityBlock, FixityRecord, ZERO_REF,
                     build_block, chain_lookup, compress_block, lookup,
                     parse_block, walk_chain)
from .surt import lookup_variants, to_surt
from .verifier import VerificationReport, Verifier, compare_fixity

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
