"""Exception types shared across the package."""


class DUFSError(Exception):
    """Base class for package errors."""


class InvalidInputError(DUFSError, ValueError):
    """Malformed data, arguments out of range, shape mismatches."""


class DegenerateBandwidthError(DUFSError):
    """The resolved kernel bandwidth is zero (e.g. duplicated points)."""


class DegenerateGraphError(DUFSError):
    """A graph with a zero-degree vertex was passed to a spectral routine."""


class TrainingDivergedError(DUFSError, FloatingPointError):
    """Loss or gradient became non-finite during training."""

    def __init__(self, message, epoch=None, mu=None):
        super().__init__(message)
        self.epoch = epoch
        self.mu = mu
