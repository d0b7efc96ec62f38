"""Exception types shared across the package."""


class MachlimitError(Exception):
    """Base class for all package-specific errors."""


class GridMismatchError(MachlimitError):
    """Two fields that must share a grid do not."""


class DimensionError(MachlimitError):
    """A multi-index or operation does not match the grid dimension."""


class StateValidityError(MachlimitError):
    """A physical-positivity or finiteness requirement failed."""


class BlowUpError(MachlimitError):
    """NaN/Inf detected during time integration."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class EllipticConvergenceError(MachlimitError):
    """The iterative elliptic solver did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CompatibilityError(MachlimitError):
    """The right-hand side of a periodic elliptic problem is not mean-zero."""


class TowerOverflowError(MachlimitError):
    """Tower layers grew beyond numerical range."""

    def __init__(self, message, last_stable_depth=None):
        super().__init__(message)
        self.last_stable_depth = last_stable_depth


class TowerDepthError(MachlimitError):
    """A norm evaluation requested more time-derivative layers than available."""

    def __init__(self, message, required_depth=None):
        super().__init__(message)
        self.required_depth = required_depth


class IndeterminateRadiusError(MachlimitError):
    """Too few resolvable spectral shells to fit a decay radius."""


class ResolutionError(MachlimitError):
    """Requested spectrum cannot be resolved on the given grid."""


class AlignmentError(MachlimitError):
    """Two trajectories do not share snapshot times or grids."""
