"""Exception hierarchy shared by all mixtv modules."""


class MixtvError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatch(MixtvError):
    """Array dimensions, coordinate counts, or value ranges are inconsistent."""


class NotAProbability(MixtvError):
    """An entry lies outside [0, 1] beyond the accepted rounding slack."""


class NormalizationError(MixtvError):
    """A weight vector or marginal row does not sum to 1 within tolerance."""


class NoActiveComponent(MixtvError):
    """Every mixing weight on one side of the coupling is zero."""


class ZeroDiscrepancy(MixtvError):
    """Conditional sampling was requested but the coupling never fails."""


class ZeroDenominator(MixtvError):
    """The failure mass of the queried configuration is zero."""


class FactViolation(MixtvError):
    """A probability ratio exceeded a bound that holds for every coupling.

    This indicates a bug in the transition construction or the dynamic
    program, not statistical noise, so it is raised rather than clamped.
    """


class NotASubcube(MixtvError):
    """A marginal is not 0, 1/2, or 1, so the exact subcube path is invalid."""


class WrongAlphabet(MixtvError):
    """A subcube operation was applied to a mixture with q != 2."""


class NotThreeCnf(MixtvError):
    """A CNF formula does not consist of 3-literal clauses over distinct variables."""


class TooLarge(MixtvError):
    """A size guard tripped before an exponential enumeration could start."""
