"""Error types shared across the package.

ValueError stays reserved for bad arguments to library functions; these two
mark the conditions the CLI maps to distinct exit codes.
"""


class ConfigError(Exception):
    """Invalid or inconsistent simulation configuration."""


class NumericalError(RuntimeError):
    """A solver failed to reach its required residual or produced non-finite values."""
