"""Exception types shared across the package."""


class VQEGError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(VQEGError, ValueError):
    """Shapes or values that violate an operation's preconditions."""


class ConfigError(InvalidArgumentError):
    """Invalid solver or experiment configuration."""


class DegenerateStrategyError(VQEGError):
    """A padded strategy put all of its mass on dummy actions."""


class UnsupportedSizeError(InvalidArgumentError):
    """The requested routine does not handle games this large."""


class SolverError(VQEGError):
    """The exact LP solver failed to terminate cleanly."""

    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} pivots)")
        self.iterations = iterations
