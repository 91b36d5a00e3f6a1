"""Exception and warning types shared across the package.

Every contract violation raises one of these rather than a bare ValueError,
so callers (and the CLI) can map failures to exit codes and report sections.
"""


class BreakscopeError(Exception):
    """Base class for all package errors."""


# --- ingestion / series ----------------------------------------------------

class MissingFile(BreakscopeError):
    pass


class MalformedRow(BreakscopeError):
    def __init__(self, line_number: int, detail: str = ""):
        self.line_number = line_number
        super().__init__(f"unparseable row at line {line_number}" + (f": {detail}" if detail else ""))


class DuplicateDate(BreakscopeError):
    pass


class AllDropped(BreakscopeError):
    pass


class NonPositiveValue(BreakscopeError):
    pass


class TooShort(BreakscopeError):
    pass


class WindowTooLong(BreakscopeError):
    pass


class ZeroVariance(BreakscopeError):
    def __init__(self, series_id):
        self.series_id = series_id
        super().__init__(f"zero variance in series {series_id!r}")


class NoOverlap(BreakscopeError):
    pass


# --- hurst -----------------------------------------------------------------

class DegenerateSubseries(BreakscopeError):
    pass


class InsufficientScales(BreakscopeError):
    pass


class NonFiniteMoment(BreakscopeError):
    pass


class OutOfRange(BreakscopeError):
    pass


# --- infotheory ------------------------------------------------------------

class NotNormalized(BreakscopeError):
    pass


class EmptyTable(BreakscopeError):
    pass


class DegenerateDimension(BreakscopeError):
    pass


# --- synth -----------------------------------------------------------------

class Unstable(BreakscopeError):
    pass


class EmbeddingFailure(BreakscopeError):
    """Circulant embedding produced negative spectrum; handled internally."""


# --- beast -----------------------------------------------------------------

class SingularSegment(BreakscopeError):
    pass


class NumericalUnderflow(BreakscopeError):
    pass


class OutOfAxis(BreakscopeError):
    pass


# --- events / report -------------------------------------------------------

class EmptyCatalog(BreakscopeError):
    pass


class PartialFailure(BreakscopeError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("missing report sections: " + ", ".join(self.missing))


# --- warnings ---------------------------------------------------------------

class DimensionalityWarning(UserWarning):
    """Raised when K*L is large relative to sample size; CMI estimates degrade."""


class ShortWindowWarning(UserWarning):
    """Rolling window below the recommended minimum."""


class NotConvergedWarning(UserWarning):
    """Split-chain PSRF of the log evidence exceeded the threshold."""
