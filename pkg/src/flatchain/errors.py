"""Domain error types raised by the library.

Every error corresponds to a violated precondition of one of the public
operations; the CLI maps them to exit code 1 with the class name on stderr.
"""


class FlatChainError(Exception):
    """Base class for all domain errors."""


class BoundaryContact(FlatChainError):
    """An atom sits too close to the boundary of the probe set."""


class OffsetTooLong(FlatChainError):
    """A dipole offset exceeds unit length."""


class TooLarge(FlatChainError):
    """Instance exceeds the exhaustive solver's declared search bounds."""


class WrongGroup(FlatChainError):
    """Solver requires a different coefficient group."""


class OnSkeleton(FlatChainError):
    """A point lies on (or too close to) the grid's codimension-1 skeleton."""


class InsufficientResolution(FlatChainError):
    """The sample lattice cannot certify a homotopy class."""


class NonIntegral(FlatChainError):
    """A degree sum failed to round cleanly to an integer."""


class DefectTooClose(FlatChainError):
    """Defect separation violates the generator invariant."""


class TubeOutsideDomain(FlatChainError):
    """A dipole tube does not fit inside the domain."""


class TubeTooThin(FlatChainError):
    """A dipole tube is too thin for the sample lattice."""


class DegenerateBoundary(FlatChainError):
    """Adjacent boundary samples are (nearly) antipodal."""


class DomainMismatch(FlatChainError):
    """Two chains live on different domains."""


class GroupMismatch(FlatChainError):
    """Two chains use different coefficient groups."""
