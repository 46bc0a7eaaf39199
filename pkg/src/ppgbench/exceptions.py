"""Exception hierarchy for ppgbench.

Every error raised on purpose by the package derives from :class:`PpgBenchError`.
Most also derive from :class:`ValueError` so callers that only care about bad
input can catch that.
"""


class PpgBenchError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PpgBenchError, ValueError):
    """Invalid configuration (out-of-range parameter, bad enum, ...)."""


class DegenerateSignalError(PpgBenchError, ValueError):
    """Signal carries no information (e.g. constant, zero power)."""


class DegenerateInputError(PpgBenchError, ValueError):
    """Metric input for which the statistic is undefined."""


class ParseError(PpgBenchError, ValueError):
    """Malformed CSV input."""


class ProfileError(PpgBenchError, ValueError):
    """Channel profile (or mapped targets) outside the feasible pixel band."""


class RangeError(PpgBenchError, ValueError):
    """Frame target too close to 0 or 255 for the requested dither."""


class FormatError(PpgBenchError, ValueError):
    """Corrupt or truncated PPGV container."""


class InputError(PpgBenchError, ValueError):
    """Input that violates an operation's preconditions."""


class DegenerateOutputError(PpgBenchError, ValueError):
    """An operation would produce an empty or unusable result."""


class InsufficientDataError(PpgBenchError, ValueError):
    """Too few samples, beats or measurements for the requested estimate."""


class BandError(PpgBenchError, ValueError):
    """No usable spectral content inside the search band."""


class RunError(PpgBenchError, RuntimeError):
    """A bench run finished without a single successful case."""


class WriteError(PpgBenchError, OSError):
    """Report or artifact could not be written."""
