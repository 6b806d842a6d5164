"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid user configuration (bad key, out-of-range parameter)."""


class DataFormatError(ValueError):
    """Malformed input file."""


class NonFiniteError(FloatingPointError):
    """A NaN or infinity appeared during an iteration or a solve."""


class DivergenceError(RuntimeError):
    """Iterates blew up; the step size is too large for the problem."""
