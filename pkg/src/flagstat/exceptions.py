"""Exception hierarchy shared by every module of the package."""


class FlagstatError(Exception):
    """Base class for all errors raised by flagstat."""


class DomainError(FlagstatError, ValueError):
    """An input lies outside the domain of the requested operation."""


class ConvergenceError(FlagstatError, ArithmeticError):
    """An iterative kernel ran out of its iteration budget."""


class GapError(DomainError):
    """A spectral gap required to separate eigenspaces is too small."""


class DegenerateScalingError(DomainError):
    """Two adjacent block eigenvalue estimates coincide."""


class CutLocusError(DomainError):
    """A pair of subspaces lies on (or numerically near) the cut locus.

    ``index`` identifies the offending flag component when the error is
    raised from a flag-level computation, and is ``None`` otherwise.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
