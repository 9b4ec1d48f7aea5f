"""Exception types shared across the package."""


class DikinOCOError(Exception):
    """Base class for all package errors."""


class NotInterior(DikinOCOError, ValueError):
    """A point is on or outside the boundary of the feasible set."""

    def __init__(self, min_slack, message=None):
        self.min_slack = float(min_slack)
        super().__init__(message or f"point is not strictly interior (min slack {self.min_slack:.3e})")


class NotPositiveDefinite(DikinOCOError, ValueError):
    pass


class NotUnit(DikinOCOError, ValueError):
    pass


class Unbounded(DikinOCOError, ValueError):
    pass


class NotPSD(DikinOCOError, ValueError):
    pass


class LengthMismatch(DikinOCOError, ValueError):
    pass


class BadInterval(DikinOCOError, ValueError):
    pass


class StepUnsafe(DikinOCOError, RuntimeError):
    """The Dikin local norm of a proposed step reached 1."""

    def __init__(self, local_norm):
        self.local_norm = float(local_norm)
        super().__init__(f"step local norm {self.local_norm:.6g} is not < 1")


class UnsupportedComposition(DikinOCOError, ValueError):
    pass


class PreconditionError(DikinOCOError, ValueError):
    pass


class ConfigParse(DikinOCOError, ValueError):
    """Malformed experiment config; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
