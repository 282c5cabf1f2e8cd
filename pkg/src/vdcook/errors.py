"""Exception hierarchy for the engine.

Every failure mode that callers are expected to branch on has its own
class; anything else surfaces as a plain VdcookError.
"""


class VdcookError(Exception):
    """Base class for all engine errors."""


class ValidationError(VdcookError):
    """A domain object violates one of its invariants."""


# --- container format ---

class EmptyClip(VdcookError):
    """Encoding was asked to produce a clip with zero frames."""


class InvalidFrameGeometry(VdcookError):
    """A frame buffer does not match the declared width*height*3 size."""


class NotAClip(VdcookError):
    """Input bytes do not start with the container magic."""


class TruncatedClip(VdcookError):
    """Container byte length disagrees with the header."""


class InvalidHeader(VdcookError):
    """Header declares zero dimensions, zero fps terms, or zero frames."""


# --- ingestion ---

class SourceExists(VdcookError):
    pass


class UnknownConnector(VdcookError):
    pass


class UnknownSource(VdcookError):
    pass


class RecrawlNotDue(VdcookError):
    """now < schedule.next_run; state left untouched."""


class RecrawlFailed(VdcookError):
    """Connector fetch failed; the schedule was still advanced."""


# --- enrichment ---

class MotionUndefined(VdcookError):
    """Motion scoring needs at least two frames."""


class InvalidScore(VdcookError):
    pass


class InvalidSample(VdcookError):
    pass


class MissingPayload(VdcookError):
    """Clip record exists but its container bytes are gone."""


# --- annotation center ---

class UnknownAnnotator(VdcookError):
    pass


class AnnotatorExists(VdcookError):
    pass


class NoAnnotator(VdcookError):
    pass


class AnnotatorTimeout(VdcookError):
    """Retryable: the annotator endpoint did not answer in time."""


class AnnotatorProtocolError(VdcookError):
    """Endpoint answered with a malformed or mismatched payload."""


class MergeMismatch(VdcookError):
    """merge_annotations was given records for more than one clip."""


# --- index ---

class UnknownClip(VdcookError):
    pass


# --- cooking ---

class EmptyQuery(VdcookError):
    pass


class InvalidConditioning(VdcookError):
    pass


class ShortfallUnmet(VdcookError):
    """Retrieval under-delivered and the request's policy is fail."""


class PackagingAuditError(VdcookError):
    """Post-packaging audit found an entry violating the request."""


# --- stats ---

class EmptyData(VdcookError):
    pass


class InvalidEdges(VdcookError):
    pass
