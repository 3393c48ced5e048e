"""Exception hierarchy shared across the package."""


class ArithliftError(Exception):
    """Base class for all library errors."""


class NonFundamental(ArithliftError):
    pass


class EvenDiscriminant(ArithliftError):
    pass


class PrecisionUnachievable(ArithliftError):
    pass


class NotPositiveDefinite(ArithliftError):
    pass


class NotIntegral(ArithliftError):
    pass


class DomainMismatch(ArithliftError):
    pass


class EnumerationBudgetExceeded(ArithliftError):
    pass


class SplitPrime(ArithliftError):
    pass


class UnsupportedPresentation(ArithliftError):
    pass


class NotOrthogonalSum(ArithliftError):
    pass


class RankMismatch(ArithliftError):
    pass


class InsufficientPrecision(ArithliftError):
    pass


class OnSingularLocus(ArithliftError):
    pass


class TruncationBudgetExceeded(ArithliftError):
    pass


class ParseError(ArithliftError):
    pass


class HeckeViolation(ArithliftError):
    pass


class MissingCoefficient(ArithliftError):
    pass


class OutsideConvergence(ArithliftError):
    pass


class KernelDivergence(ArithliftError):
    pass


class DegenerateTestFunction(ArithliftError):
    pass


class DomainError(ArithliftError):
    pass
