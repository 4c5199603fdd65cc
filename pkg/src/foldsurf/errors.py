"""Exception hierarchy.

Everything raised on purpose by this package derives from FoldsurfError,
so callers can catch one type at the CLI boundary.  Validation of
malformed input files raises FormatError; the remaining classes mirror
the failure modes of the individual operations.
"""

__all__ = [
    "FoldsurfError",
    "FormatError",
    "EmptyWordError",
    "TrivialGeneratorError",
    "DisconnectedFatgraphError",
    "BoundaryNotReducedError",
    "NoLiftError",
    "AmbiguousLiftError",
    "RigidityRequiredError",
    "UnmatchedBoundaryError",
    "WordMismatchError",
    "FailedCheckError",
    "TagInfeasibleError",
    "SearchExhaustedError",
    "NotHomologicallyTrivialError",
    "TooLargeError",
    "CertificationError",
    "RankDropError",
    "MalnormalityFailedError",
    "RigidityFailedError",
]


class FoldsurfError(Exception):
    """Base class for all package errors."""


class FormatError(FoldsurfError):
    """A file or serialized object does not match the expected format."""


class EmptyWordError(FoldsurfError):
    """An operation that needs a nonempty word got the trivial one."""


class TrivialGeneratorError(FoldsurfError):
    """A rose was requested on a generating set containing the empty word."""


class DisconnectedFatgraphError(FoldsurfError):
    """Euler characteristic / genus only make sense for connected fatgraphs."""


class BoundaryNotReducedError(FoldsurfError):
    """A traced boundary word failed to be cyclically reduced.

    This happens exactly when the fatgraph has a valence-1 vertex or is
    so far from folded that a boundary walk backtracks through distinct
    edges with equal labels.  Quotients of reduced chains never do this.
    """


class NoLiftError(FoldsurfError):
    """A boundary word admits no closed lift to the target core."""


class AmbiguousLiftError(FoldsurfError):
    """A boundary word admits more than one closed lift to the target core."""


class RigidityRequiredError(FoldsurfError):
    """An operation needed a unique boundary lift but none was recorded."""


class UnmatchedBoundaryError(FoldsurfError):
    """A gluing pairing misses or reuses a boundary component."""


class WordMismatchError(FoldsurfError):
    """Glued boundary components do not carry mutually inverse words."""


class FailedCheckError(FoldsurfError):
    """A named certificate check failed.  The failing check is `.check`."""

    def __init__(self, check, message=None):
        self.check = check
        super().__init__(message or f"certificate check failed: {check}")


class TagInfeasibleError(FoldsurfError):
    """Marked positions cannot all be tagged with disjoint inverse arcs."""


class SearchExhaustedError(FoldsurfError):
    """The pairing search ran out of budget without a verified surface."""


class NotHomologicallyTrivialError(FoldsurfError):
    """A chain whose letters do not cancel in homology cannot bound."""


class TooLargeError(FoldsurfError):
    """Exhaustive enumeration was requested beyond its size cutoff."""


class CertificationError(FoldsurfError):
    """A certificate pipeline stage failed.  The stage name is `.stage`."""

    stage = "certify"

    def __init__(self, message=None, witness=None):
        self.witness = witness
        super().__init__(message or f"certification failed at stage: {self.stage}")


class RankDropError(CertificationError):
    """Folding the images was not a homotopy equivalence (degenerate sample)."""

    stage = "rank"


class MalnormalityFailedError(CertificationError):
    """The edge-group images are not a malnormal family."""

    stage = "malnormal"


class RigidityFailedError(CertificationError):
    """Some chain image is not fully rigid in the target core."""

    stage = "rigid"
