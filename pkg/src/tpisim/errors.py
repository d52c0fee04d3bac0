"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, fit errors -> 3,
InvariantViolation -> 4.
"""


class ConfigError(ValueError):
    """Invalid configuration value, config file syntax, or scan plan."""


class DegenerateWavelengthError(ValueError):
    """Operation undefined for equal center wavelengths (infinite beat period)."""


class StreamError(ValueError):
    """Invalid event stream input (unsorted, out of range, duration mismatch)."""


class NoBaselineError(ValueError):
    """Scan contains no far-envelope points to normalize against."""


class FitConvergenceError(RuntimeError):
    """Nonlinear fit failed to converge; message carries residual diagnostics."""


class SpanError(ValueError):
    """Scan range too narrow for the requested fit (envelope not resolved)."""


class AliasingError(ValueError):
    """Sampling too coarse (or signal absent) to identify an oscillation period."""


class InvariantViolation(RuntimeError):
    """Internal consistency check failed; indicates a bug, not bad user input."""
