"""Exception types shared across the framework."""


class MementofixError(Exception):
    """Base class for all framework errors."""


class MalformedUriM(MementofixError):
    """A URI does not contain a wayback-style timestamped memento segment."""


class MalformedUri(MementofixError):
    """Input is not an absolute http(s) URI."""


class MalformedHash(MementofixError):
    """A hash string does not match the md5+sha256 grammar."""


class ParseError(MementofixError):
    """A response body could not be parsed (link-format, JSON, UKVS)."""


class HttpError(MementofixError):
    """Non-2xx HTTP status after following redirects."""

    def __init__(self, status, url=None, message=None):
        self.status = status
        self.url = url
        super().__init__(message or f"HTTP {status} for {url}")


class Timeout(MementofixError):
    """An HTTP request exceeded its deadline."""


class GenerationFailed(MementofixError):
    """Manifest generation failed; the original cause is chained."""


class InvalidManifest(MementofixError):
    """A manifest violates a structural invariant."""


class DuplicateLine(MementofixError):
    """Two identical full record lines would collide inside one block."""


class NotSorted(MementofixError):
    """A loaded block's record lines violate byte-wise sort order."""


class TamperDetected(MementofixError):
    """Block bytes do not hash to the chain reference that named them."""

    def __init__(self, ref, message=None):
        self.ref = ref
        super().__init__(message or f"block tampered: {ref}")


class BrokenChain(MementofixError):
    """A chain reference could not be fetched at all."""

    def __init__(self, ref, message=None):
        self.ref = ref
        super().__init__(message or f"chain broken at: {ref}")


class NoManifestFound(MementofixError):
    """No manifest could be discovered for a memento."""


class NoRecordFound(MementofixError):
    """No block record exists for a memento's key."""


class CaptureFailed(MementofixError):
    """The mock archive could not fetch the submitted URI."""


class SubmissionFailed(MementofixError):
    """One archive endpoint rejected or failed a dissemination."""

    def __init__(self, endpoint, cause):
        self.endpoint = endpoint
        self.cause = cause
        super().__init__(f"submission to {endpoint} failed: {cause}")
