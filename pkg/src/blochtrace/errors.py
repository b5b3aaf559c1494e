"""Exception and warning types shared across the package."""


class BlochTraceError(Exception):
    """Base class for all errors raised by this package."""


# --- extraction -------------------------------------------------------------

class CenterNodeError(BlochTraceError):
    """The center sample sits on a field node; the triplet is unusable."""


class DegenerateTripletError(BlochTraceError):
    """All three samples are (numerically) zero; no wave is present."""


class AmbiguousOrientationError(BlochTraceError):
    """Both Floquet roots sit at a band-edge tie and no reference was given."""


class SingularAmplitudeSystemError(BlochTraceError):
    """u_forward**2 == 1 exactly; wave amplitudes cannot be separated."""


# --- oracles ----------------------------------------------------------------

class ZeroImpedanceError(BlochTraceError):
    """Propagation constant is exactly zero; the wave impedance diverges."""


class DegenerateCellError(BlochTraceError):
    """Cell eigenvalues coincide at +-1 and cannot be oriented."""


# --- synthesis --------------------------------------------------------------

class ResonanceOverflowError(BlochTraceError):
    """Internal amplitudes exceeded the overflow guard (lossless resonance)."""


# --- trace files ------------------------------------------------------------

class TraceIOError(BlochTraceError):
    """Base class for trace file reading/writing problems."""


class ParseError(TraceIOError):
    """Malformed line in a trace or column file."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class HeaderError(TraceIOError):
    """Missing, duplicate or inconsistent header keys."""


class GridError(TraceIOError):
    """The z column is not a uniform ascending grid."""


class MappingError(TraceIOError):
    """A column mapping does not resolve for a data row."""


class PeriodGridMismatchError(TraceIOError):
    """The period is not an integer multiple of the sample spacing."""


# --- sweeps -----------------------------------------------------------------

class NoValidTripletsError(BlochTraceError):
    """Every triplet at a frequency failed its preconditions."""


# --- warnings ---------------------------------------------------------------

class TraceValidationWarning(UserWarning):
    """A soft trace invariant is violated (recorded, not fatal)."""


class BranchJumpWarning(UserWarning):
    """Adjacent sweep points jumped by more than the continuation budget."""
