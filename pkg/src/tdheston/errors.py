"""Exception types shared across the package."""


class TdHestonError(Exception):
    """Base class for all package-specific errors."""


class ParameterDomainError(TdHestonError, ValueError):
    """Model or contract inputs outside their admissible domain."""


class NumericalSingularityError(TdHestonError, ArithmeticError):
    """A closed-form denominator or intermediate became numerically singular."""


class OutOfHorizonError(TdHestonError, ValueError):
    """Requested maturity lies beyond the term structure's last period."""


class DegenerateForwardError(TdHestonError, ArithmeticError):
    """The forward normalizer phi(-i) vanished or is not finite."""


class QuadratureError(TdHestonError, ArithmeticError):
    """Fourier inversion failed to converge within the panel budget.

    Carries the best available partial estimate in ``partial``.
    """

    def __init__(self, message: str, partial: float):
        super().__init__(message)
        self.partial = partial


class NoSolutionError(TdHestonError, ValueError):
    """Root search target is outside the attainable range (e.g. implied vol)."""


class DataError(TdHestonError, ValueError):
    """Malformed or inconsistent market-data input."""
