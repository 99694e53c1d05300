"""Exception types shared across the library.

All numerical failure modes raise subclasses of :class:`LindbraidError`, so
callers (notably the CLI) can map them to a stable exit code without
pattern-matching messages.
"""


class LindbraidError(Exception):
    """Base class for all library errors."""


class ConfigError(LindbraidError):
    """Invalid run configuration (unknown keys, violated parameter bounds)."""


class DimensionError(LindbraidError):
    """Operands have incompatible or unsupported shapes."""


class ConvergenceError(LindbraidError):
    """An iterative routine exhausted its budget without converging."""


class RangeError(LindbraidError):
    """Argument magnitude outside the supported numerical range."""


class SingularMatrixError(LindbraidError):
    """Linear solve attempted on a (numerically) singular matrix."""

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class TrackingError(LindbraidError):
    """Strand tracking failed; carries the offending counting-field interval."""

    def __init__(self, message, k_interval=None):
        super().__init__(message)
        self.k_interval = k_interval


class ResolutionError(LindbraidError):
    """Phase increments too coarse even after grid refinement."""


class DegeneracyError(LindbraidError):
    """Re-part crossing is tangential; a nearby exceptional point is likely."""


class DiabolicDegeneracyError(LindbraidError):
    """Eigenvalues coalesce but eigenvectors stay distinct (not an EP)."""


class SearchError(LindbraidError):
    """Optimization-based search did not converge to a certified solution."""


class OrderMismatchError(LindbraidError):
    """Rank structure inconsistent with the requested Jordan-chain order."""


class CutoffError(LindbraidError):
    """Jump-number cutoff too small; distribution tail mass not negligible."""


class StepSizeError(LindbraidError):
    """Trajectory time step too coarse for the first-order jump unraveling."""


class UnwrapError(LindbraidError):
    """Phase unwrapping ambiguous; time grid too coarse for |Im lambda|."""


class InsufficientSignalError(LindbraidError):
    """Subtracted sub-leading signal is below the noise floor."""


class EliminationError(LindbraidError):
    """Fast block numerically singular; time-scale separation violated."""
