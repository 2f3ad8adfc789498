"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`HitchError`,
so callers (notably the CLI) can map families of failures onto exit codes.
"""


class HitchError(Exception):
    """Base class for all package errors."""


class ParameterError(HitchError, ValueError):
    """Invalid physical or numerical parameter."""


class GridMismatchError(ParameterError):
    pass


class GuardError(HitchError):
    """A numerical guard refused to produce a result (e.g. edge leakage)."""


class DiagnosticsError(HitchError):
    """A diagnostic is undefined for the given field (zero power)."""


class IdlerAbsentError(DiagnosticsError):
    """Mode 2 has not been generated, so two-beam quantities are undefined."""


class OnsetNotFoundError(HitchError):
    pass


class GainNotAttainableError(HitchError):
    pass


class NonMonotoneGainError(HitchError):
    """Net gain was not strictly increasing in the cross coupling.

    ``sweep`` holds the ``(b, gain)`` pairs that were evaluated.
    """

    def __init__(self, message, sweep=()):
        super().__init__(message)
        self.sweep = list(sweep)


class DatasetError(HitchError, ValueError):
    """Malformed or insufficient measurement data."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
