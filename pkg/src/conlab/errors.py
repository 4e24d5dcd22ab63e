"""Exception types shared across the package."""


class ConlabError(Exception):
    """Base class for all package-specific errors."""


class NonConvergenceError(ConlabError):
    """A local Newton solver exhausted its iteration budget.

    Carries the last residual norm so callers can report how far the
    solve was from the requested tolerance.
    """

    def __init__(self, message, residual_norm=None, iterations=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations


class GlobalNonConvergenceError(ConlabError):
    """The structural Newton loop failed at some load step."""

    def __init__(self, message, step=None, residual_norm=None):
        super().__init__(message)
        self.step = step
        self.residual_norm = residual_norm


class SingularSystemError(ConlabError):
    """The assembled stiffness matrix is singular (ill-posed structure)."""


class InvalidShapeError(ConlabError):
    """Network layer specification is unusable."""


class DimensionMismatchError(ConlabError):
    """An input does not match the expected dimensionality."""


class UnknownKindError(ConlabError):
    """Unrecognised activation name."""


class UnknownFamilyError(ConlabError):
    """Unrecognised loading-path family."""


class EmptyRangeError(ConlabError):
    """A collocation range contains no grid point."""


class MissingLabelsError(ConlabError):
    """A labelled-data loss was requested without labels."""


class LengthMismatchError(ConlabError):
    """Two trajectories of different length cannot be compared point-wise."""


class CheckpointError(ConlabError):
    """Base class for checkpoint I/O failures."""


class BadMagicError(CheckpointError):
    """File does not start with the checkpoint magic bytes."""


class UnsupportedVersionError(CheckpointError):
    """Checkpoint version is newer than this code understands."""


class ShapeMismatchError(CheckpointError):
    """Checkpoint payload is inconsistent with its declared shapes."""


class IoFailureError(CheckpointError):
    """Underlying read/write failed or the file is truncated."""


class ConfigError(ConlabError):
    """A run configuration failed validation."""
