"""Semantic exception hierarchy; public functions never raise bare ValueError."""


class FinshareError(Exception):
    """Base error for this package."""


class ValidationError(FinshareError, ValueError):
    """Inputs violate a construction or precondition contract."""


class UtilityDomainError(ValidationError):
    """A payoff value fell outside the utility function's domain."""


class EvaluationError(FinshareError, ArithmeticError):
    """A transform produced a non-finite value during integration."""


class BracketError(FinshareError):
    """A root or inverse is not bracketed by the available interval."""


class NoRootError(FinshareError):
    """A solve target is unattainable on its bracket.

    Carries enough context to report the failure as a finding instead of a
    crash: the objective values at both bracket endpoints and, when known,
    the achievable range of the target.
    """

    def __init__(self, message, *, lo=None, hi=None, f_lo=None, f_hi=None,
                 achievable=None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi
        self.f_lo = f_lo
        self.f_hi = f_hi
        self.achievable = achievable


class ConfigError(FinshareError, ValueError):
    """Run configuration is malformed; message names the offending key."""


class InvariantError(FinshareError):
    """An internal consistency check failed (reported via exit code 3)."""
