"""Fund allocation, the two payoff transforms, and their aggregate moments.

Funds L split into a share-contract pool Z1 = beta*L and a fixed-rate pool
Z2 = L - Z1.  Under the fixed-rate (FR) contract the financier receives
Z2*min(R, D) and the investor the remainder; under the stochastic-return
(SR) contract the financier receives (1-alpha)*Z1*R and the investor
alpha*Z1*R.  The investor leg is always computed as the exact remainder of
funds*return so conservation holds bit-for-bit per realization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .returns import (QuadratureSpec, ReturnDistribution, check_return_support,
                      expect, mean, partial_expectation_call,
                      partial_expectation_min, variance)


@dataclass(frozen=True)
class FundAllocation:
    """Total investable funds and the share routed to the SR pool."""

    L: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.L > 0.0):
            raise ValidationError(f"total funds L must be > 0, got {self.L!r}")
        if not (0.0 < self.beta < 1.0):
            raise ValidationError(f"beta must lie in (0, 1), got {self.beta!r}")

    def _split(self) -> tuple[float, float]:
        # Sterbenz-safe complement so z1 + z2 == L exactly (see _split_exact)
        z1 = self.beta * self.L
        if z1 >= 0.5 * self.L:
            return z1, self.L - z1
        z2 = self.L - z1
        return self.L - z2, z2

    @property
    def z1(self) -> float:
        return self._split()[0]

    @property
    def z2(self) -> float:
        return self._split()[1]


@dataclass(frozen=True)
class ContractTerms:
    """Either FR terms (rate d) or SR terms (share alpha)."""

    variant: str
    value: float

    def __post_init__(self) -> None:
        if self.variant not in ("fr", "sr"):
            raise ValidationError(f"contract variant must be 'fr' or 'sr', got {self.variant!r}")
        name = "rate d" if self.variant == "fr" else "share alpha"
        if not (0.0 < self.value < 1.0):
            raise ValidationError(f"{name} must lie in (0, 1), got {self.value!r}")

    @classmethod
    def fr(cls, d: float) -> "ContractTerms":
        return cls("fr", d)

    @classmethod
    def sr(cls, alpha: float) -> "ContractTerms":
        return cls("sr", alpha)


@dataclass(frozen=True)
class PayoffSummary:
    """Expected aggregate payoffs (currency) and financier variances."""

    e_p1: float
    e_p2: float
    e_y1: float
    e_y2: float
    v_p1: float
    v_p2: float


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _split_exact(total: float, financier: float) -> tuple[float, float]:
    """Split ``total`` into (financier, investor) with a bit-exact sum.

    Sterbenz: a - b is exact for b in [a/2, 2a], so differencing against
    whichever leg reaches total/2 makes the pair sum to ``total`` with no
    rounding; at most one leg moves by one ulp from its defining formula.
    """
    if financier >= 0.5 * total:
        return financier, total - financier
    investor = total - financier
    return total - investor, investor


def payoff_fr(z2: float, r: float, d: float) -> tuple[float, float]:
    """Realized FR payoffs (financier, investor); legs sum to z2*r exactly."""
    _check(z2 > 0.0, f"z2 must be > 0, got {z2!r}")
    _check(0.0 < r < 1.0, f"return r must lie in (0, 1), got {r!r}")
    _check(0.0 < d < 1.0, f"rate d must lie in (0, 1), got {d!r}")
    return _split_exact(z2 * r, z2 * min(r, d))


def payoff_sr(z1: float, r: float, alpha: float) -> tuple[float, float]:
    """Realized SR payoffs (financier, investor); legs sum to z1*r exactly."""
    _check(z1 > 0.0, f"z1 must be > 0, got {z1!r}")
    _check(0.0 < r < 1.0, f"return r must lie in (0, 1), got {r!r}")
    _check(0.0 < alpha < 1.0, f"share alpha must lie in (0, 1), got {alpha!r}")
    return _split_exact(z1 * r, (1.0 - alpha) * z1 * r)


def expected_payoffs(alloc: FundAllocation, dist: ReturnDistribution, d: float,
                     alpha: float, quad: QuadratureSpec | None = None) -> PayoffSummary:
    """Aggregate expectations and financier variances for both contracts."""
    check_return_support(dist)
    _check(0.0 < d < 1.0, f"rate d must lie in (0, 1), got {d!r}")
    _check(0.0 < alpha < 1.0, f"share alpha must lie in (0, 1), got {alpha!r}")
    mu = mean(dist, quad)
    e_min = partial_expectation_min(dist, d, quad)
    e_call = partial_expectation_call(dist, d, quad)
    var_min = expect(dist, lambda r: (np.minimum(r, d) - e_min) ** 2, quad,
                     breakpoints=(d,))
    return PayoffSummary(
        e_p1=(1.0 - alpha) * alloc.z1 * mu,
        e_p2=alloc.z2 * e_min,
        e_y1=alpha * alloc.z1 * mu,
        e_y2=alloc.z2 * e_call,
        v_p1=(1.0 - alpha) ** 2 * alloc.z1 ** 2 * variance(dist, quad),
        v_p2=alloc.z2 ** 2 * var_min,
    )


def financier_gap(alloc: FundAllocation, dist: ReturnDistribution, d: float,
                  alpha: float, quad: QuadratureSpec | None = None) -> float:
    """Gap E(P2) - E(P1) between the financier's FR and SR expected payoffs.

    Affine and strictly increasing in alpha with slope beta*L*E(R).  Accepts
    the closed interval alpha in [0, 1] because solvers probe the endpoints.
    Evaluated through the generic expectation path (not the closed form) so
    the same code validates non-affine payoff variants.
    """
    check_return_support(dist)
    _check(0.0 < d < 1.0, f"rate d must lie in (0, 1), got {d!r}")
    _check(0.0 <= alpha <= 1.0, f"share alpha must lie in [0, 1], got {alpha!r}")
    e_p2 = alloc.z2 * partial_expectation_min(dist, d, quad)
    e_p1 = (1.0 - alpha) * alloc.z1 * mean(dist, quad)
    return e_p2 - e_p1
