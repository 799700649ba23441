"""Exception types shared across the package."""


class DataError(ValueError):
    """Invalid input data: bad shapes, out-of-range values, unreadable files."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, degenerate matrix)."""


class ConfigError(ValueError):
    """A configuration field is missing, has the wrong type or is out of range."""
