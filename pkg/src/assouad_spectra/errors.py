"""Exception hierarchy shared by every module."""


class SpectraError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SpectraError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class StructuralError(SpectraError, ValueError):
    """Mismatched shapes, grids or kinds between objects that must agree."""


class ValidationError(SpectraError, ValueError):
    """A configuration payload failed schema or invariant validation."""


class InsufficientDataError(SpectraError, ValueError):
    """Not enough scales, levels, letters or horizon to compute a value."""


class OracleContractError(SpectraError, RuntimeError):
    """A covering oracle returned a value that violates its contract."""


class ResourceError(SpectraError, RuntimeError):
    """A configured resource cap (depth, word count, support size) was hit."""


class PreconditionError(SpectraError, ValueError):
    """A caller-asserted precondition does not hold."""


class ExtinctionError(SpectraError, RuntimeError):
    """Every Monte-Carlo trial died out before the requested depth."""

    def __init__(self, message, survival_fraction=0.0):
        super().__init__(message)
        self.survival_fraction = survival_fraction


class ScheduleError(SpectraError, ValueError):
    """A block schedule has overlapping or non-increasing blocks."""
