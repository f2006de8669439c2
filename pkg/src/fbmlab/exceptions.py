"""Error types shared across the package."""


class ConfigurationError(ValueError):
    """Rejected parameters or configuration; maps to CLI exit code 2."""


class NumericalAbort(RuntimeError):
    """A solver produced a non-finite value; maps to CLI exit code 3."""

    def __init__(self, message, step=None, sample_index=None):
        super().__init__(message)
        self.step = step
        self.sample_index = sample_index


class SpectralFactorizationError(RuntimeError):
    """Internal failure while factorizing a covariance; signals a bug, not bad input."""
