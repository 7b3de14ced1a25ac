"""Concave, increasing, bounded utility families with exact derivatives.

Four qualitatively different curvature profiles are provided so dominance
claims can be exercised across a spread of risk attitudes rather than a
single functional form:

* ``cara``       u(x) = (1 - exp(-a*x)) / a,  a > 0
* ``quadratic``  u(x) = x - (b/2)*x**2,       b > 0, valid only for x < 1/b
* ``power``      u(x) = x**rho,               rho in (0, 1)
* ``log_shift``  u(x) = ln(x + c),            c > 0 (keeps a payoff of 0 evaluable)

Each instance carries a bounded payoff domain [x_lo, x_hi]; monotonicity and
strict concavity are asserted numerically on an interior grid at
construction, so a parameterisation that is not a risk-averse utility on its
domain fails fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import BracketError, UtilityDomainError, ValidationError
from .returns import (DEFAULT_QUAD, QuadratureSpec, ReturnDistribution,
                      as_finite, expect, is_discrete)

FAMILIES = ("cara", "quadratic", "power", "log_shift")

_DOMAIN_SLACK = 1e-12
_SCAN_NODES = 64


@dataclass(frozen=True)
class UtilityFunction:
    family: str
    param: float
    x_lo: float = 0.0
    x_hi: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown utility family {self.family!r}")
        if not (self.param > 0.0):
            raise ValidationError(f"{self.family} parameter must be > 0, got {self.param!r}")
        if self.family == "power" and not (0.0 < self.param < 1.0):
            raise ValidationError(f"power exponent must lie in (0, 1), got {self.param!r}")
        if not (self.x_lo < self.x_hi):
            raise ValidationError(f"domain must satisfy x_lo < x_hi, got [{self.x_lo}, {self.x_hi}]")
        if self.family == "quadratic" and not (self.x_hi < 1.0 / self.param):
            raise ValidationError(
                f"quadratic utility is increasing only below 1/b = {1.0 / self.param}; "
                f"domain upper bound {self.x_hi} is too large")
        # numeric risk-aversion scan on interior nodes
        xs = np.linspace(self.x_lo, self.x_hi, _SCAN_NODES + 2)[1:-1]
        d1 = deriv1(self, xs)
        d2 = deriv2(self, xs)
        vals = eval_utility(self, xs)
        if not (np.all(d1 > 0.0) and np.all(d2 < 0.0) and np.all(np.isfinite(vals))):
            raise ValidationError(
                f"{self.family}({self.param}) is not increasing, strictly concave "
                f"and bounded on [{self.x_lo}, {self.x_hi}]")


def cara(a: float, x_lo: float = 0.0, x_hi: float = 1.0) -> UtilityFunction:
    return UtilityFunction("cara", a, x_lo, x_hi)


def quadratic(b: float, x_lo: float = 0.0, x_hi: float = 1.0) -> UtilityFunction:
    return UtilityFunction("quadratic", b, x_lo, x_hi)


def power(rho: float, x_lo: float = 0.0, x_hi: float = 1.0) -> UtilityFunction:
    return UtilityFunction("power", rho, x_lo, x_hi)


def log_shift(c: float, x_lo: float = 0.0, x_hi: float = 1.0) -> UtilityFunction:
    return UtilityFunction("log_shift", c, x_lo, x_hi)


def with_domain(u: UtilityFunction, x_lo: float, x_hi: float) -> UtilityFunction:
    """Same family and parameter on a different payoff domain."""
    return replace(u, x_lo=x_lo, x_hi=x_hi)


def _check_domain(u: UtilityFunction, x: np.ndarray) -> None:
    lo_ok = x >= u.x_lo - _DOMAIN_SLACK
    hi_ok = x <= u.x_hi + _DOMAIN_SLACK
    bad = ~(lo_ok & hi_ok)
    if np.any(bad):
        offender = float(np.asarray(x)[bad][0])
        raise UtilityDomainError(
            f"value {offender!r} outside {u.family} domain [{u.x_lo}, {u.x_hi}]")


def eval_utility(u: UtilityFunction, x) -> np.ndarray | float:
    """u(x); raises UtilityDomainError outside [x_lo, x_hi]."""
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    _check_domain(u, x)
    if u.family == "cara":
        y = -np.expm1(-u.param * x) / u.param
    elif u.family == "quadratic":
        y = x - 0.5 * u.param * x ** 2
    elif u.family == "power":
        y = np.power(np.maximum(x, 0.0), u.param)
    else:
        y = np.log(x + u.param)
    return float(y) if scalar else y


def deriv1(u: UtilityFunction, x) -> np.ndarray | float:
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    _check_domain(u, x)
    if u.family == "cara":
        y = np.exp(-u.param * x)
    elif u.family == "quadratic":
        y = 1.0 - u.param * x
    elif u.family == "power":
        # derivative is +inf at x = 0; callers treat that honestly
        with np.errstate(divide="ignore"):
            y = u.param * np.power(np.maximum(x, 0.0), u.param - 1.0)
    else:
        y = 1.0 / (x + u.param)
    return float(y) if scalar else y


def deriv2(u: UtilityFunction, x) -> np.ndarray | float:
    scalar = np.isscalar(x)
    x = np.asarray(x, dtype=float)
    _check_domain(u, x)
    if u.family == "cara":
        y = -u.param * np.exp(-u.param * x)
    elif u.family == "quadratic":
        y = np.full_like(x, -u.param)
    elif u.family == "power":
        with np.errstate(divide="ignore"):
            y = u.param * (u.param - 1.0) * np.power(np.maximum(x, 0.0), u.param - 2.0)
    else:
        y = -1.0 / (x + u.param) ** 2
    return float(y) if scalar else y


def expected_utility(u: UtilityFunction, dist: ReturnDistribution,
                     transform: Callable[[np.ndarray], np.ndarray],
                     quad: QuadratureSpec | None = None,
                     breakpoints: Sequence[float] = ()) -> float:
    """E[u(s(R))] with the integration interval split at every kink of s."""
    return expect(dist, lambda r: eval_utility(u, transform(r)), quad,
                  breakpoints=breakpoints)


def certainty_equivalent(u: UtilityFunction, dist: ReturnDistribution,
                         transform: Callable[[np.ndarray], np.ndarray],
                         quad: QuadratureSpec | None = None,
                         breakpoints: Sequence[float] = (),
                         residual_tol: float = 1e-12,
                         max_iter: int = 200) -> float:
    """Sure payoff c with u(c) = E[u(s(R))], by bisection on the domain.

    Bisection rather than a derivative method: u' can be vanishingly small
    near saturation (CARA with a large coefficient), which strands Newton
    steps.
    """
    target = expected_utility(u, dist, transform, quad, breakpoints)
    lo, hi = u.x_lo, u.x_hi
    f_lo = eval_utility(u, lo) - target
    f_hi = eval_utility(u, hi) - target
    if f_lo > residual_tol or f_hi < -residual_tol:
        raise BracketError(
            f"expected utility {target!r} outside u range [{eval_utility(u, lo)!r}, "
            f"{eval_utility(u, hi)!r}]")
    c = 0.5 * (lo + hi)
    for _ in range(max_iter):
        c = 0.5 * (lo + hi)
        f_c = eval_utility(u, c) - target
        if abs(f_c) <= residual_tol:
            return c
        if f_c < 0.0:
            lo = c
        else:
            hi = c
    return c
