"""Semantic exception hierarchy.

Public functions raise these instead of bare ValueError so callers (and the
CLI exit-code logic) can tell configuration mistakes apart from genuine
numerical failures.
"""


class EpiLabError(Exception):
    """Base error for this package."""


class InvalidParametersError(EpiLabError, ValueError):
    """Family or grid parameters violate their contract."""


class GridTooSmallError(EpiLabError):
    """The requested box truncates more than the allowed probability mass."""


class NonFiniteInputError(EpiLabError, ValueError):
    """A gridded function handed to quadrature contains NaN or infinity."""


class ExcessiveMaskLossError(EpiLabError):
    """The near-zero-density mask covers too much probability mass for
    expectations to be trustworthy."""


class KernelUnderresolvedError(EpiLabError):
    """A smoothing step is too small for the grid spacing: the Gaussian
    kernel cannot be sampled faithfully.  Coarsen the step or refine the
    grid."""


class StepSizeInsufficientError(EpiLabError):
    """The half-step Richardson check on a flow run failed; the trajectory
    (attached as ``.trajectory``) is not trusted at the requested accuracy."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ConfigError(EpiLabError, ValueError):
    """A run configuration document failed to parse or validate."""
