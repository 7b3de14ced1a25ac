"""Sharing rules, mean-preserving spreads, and stochastic-dominance tests.

A sharing rule maps a realized return rate r to a payoff rate s(r) with
0 <= s(r) <= r; the rule's effective share is E[s(R)]/E[R].  Paired
financier/investor rules exhaust the return.  A mean-preserving spread (MPS)
adds independent mean-zero noise to a payoff law; spreads are constructed
exactly as product measures over finite supports, and the riskiness ordering
is checked with the integrated-CDF test for second-order stochastic
dominance (SOSD).

MPS validation here is constructive: deciding whether an arbitrary pair of
laws admits a noise decomposition is underdetermined, and the equal-mean
integrated-CDF test is the general-pair criterion anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .returns import (ATOM_MERGE_TOL, Degenerate, DiscreteFinite,
                      QuadratureSpec, ReturnDistribution, as_finite, expect,
                      is_discrete, mean, quantile_grid, variance)
from .utility import UtilityFunction, deriv2, eval_utility, expected_utility

NOISE_MEAN_TOL = 1e-12


# ---------------------------------------------------------------------------
# Sharing rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SharingRule:
    """Payoff-rate transform r -> s(r) with an optional outcome boost.

    Labels: ``sr_investor`` s(r) = share*r; ``sr_financier`` s(r) =
    (1-share)*r; ``fr_financier`` s(r) = min(boost*r, rate); ``fr_investor``
    s(r) = max(boost*r - rate, 0).  A boost > 1 models a reallocated
    contract and is exempt from the 0 <= s(r) <= r bounds by design.
    """

    label: str
    share: float | None = None
    rate: float | None = None
    boost: float = 1.0

    def __post_init__(self) -> None:
        if self.label in ("sr_investor", "sr_financier"):
            if self.share is None or not (0.0 < self.share < 1.0):
                raise ValidationError(f"{self.label} needs a share in (0, 1), got {self.share!r}")
        elif self.label in ("fr_investor", "fr_financier"):
            if self.rate is None or not (0.0 < self.rate < 1.0):
                raise ValidationError(f"{self.label} needs a rate in (0, 1), got {self.rate!r}")
        else:
            raise ValidationError(f"unknown sharing rule label {self.label!r}")
        if not (self.boost >= 1.0):
            raise ValidationError(f"boost must be >= 1, got {self.boost!r}")

    def transform(self, r: np.ndarray) -> np.ndarray:
        if self.label == "sr_investor":
            return self.share * np.asarray(r, dtype=float)
        if self.label == "sr_financier":
            return (1.0 - self.share) * np.asarray(r, dtype=float)
        if self.label == "fr_financier":
            return np.minimum(self.boost * np.asarray(r, dtype=float), self.rate)
        return np.maximum(self.boost * np.asarray(r, dtype=float) - self.rate, 0.0)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        if self.rate is None:
            return ()
        return (self.rate / self.boost,)


def sr_investor(alpha: float) -> SharingRule:
    return SharingRule("sr_investor", share=alpha)


def sr_financier(alpha: float) -> SharingRule:
    return SharingRule("sr_financier", share=alpha)


def fr_financier(d: float, boost: float = 1.0) -> SharingRule:
    return SharingRule("fr_financier", rate=d, boost=boost)


def fr_investor(d: float, boost: float = 1.0) -> SharingRule:
    return SharingRule("fr_investor", rate=d, boost=boost)


def condition_flags(rule: SharingRule, dist: ReturnDistribution,
                    quad: QuadratureSpec | None = None,
                    probe_count: int = 257) -> dict[str, bool]:
    """Bounds checks for a sharing rule over the support.

    ``strictly_below`` is False for any rule that attains s(r) = r or 0 on a
    set of positive measure (the fixed-rate investor leg does, below the
    rate); such rules are still accepted, the flag records it.  Boosted
    rules are exempt from the bounds by design.
    """
    pts = (np.asarray(as_finite(dist).values) if is_discrete(dist)
           else np.linspace(dist.lo, dist.hi, probe_count))
    s = rule.transform(pts)
    exempt = rule.boost != 1.0
    tol = 1e-15
    return {
        "bounded_below": exempt or bool(np.all(s >= -tol)),
        "bounded_above": exempt or bool(np.all(s <= pts + tol)),
        "strictly_between": exempt or bool(np.all((s > tol) & (s < pts - tol))),
        "exempt_boosted": exempt,
    }


def pair_completeness_gap(financier: SharingRule, investor: SharingRule,
                          points: np.ndarray) -> float:
    """max |s_P(r) + s_Y(r) - r| over the probe points.

    Zero in exact arithmetic for a matched pair; in floating point a
    min/max pair can be one ulp off r, so callers assert against an
    explicit budget instead of literal equality on arbitrary grids.
    """
    pts = np.asarray(points, dtype=float)
    return float(np.max(np.abs(financier.transform(pts) + investor.transform(pts) - pts)))


def effective_share(rule: SharingRule, dist: ReturnDistribution,
                    quad: QuadratureSpec | None = None) -> float:
    """E[s(R)] / E[R]: the share for which the rule is an alpha-sharing."""
    num = expect(dist, rule.transform, quad, breakpoints=rule.breakpoints)
    return num / mean(dist, quad)


def induced_distribution(rule: SharingRule,
                         dist: ReturnDistribution) -> DiscreteFinite:
    """Exact pushforward of a finite return law through the rule."""
    fin = as_finite(dist)
    vals = rule.transform(np.asarray(fin.values))
    return DiscreteFinite(zip(vals.tolist(), fin.probs))


# ---------------------------------------------------------------------------
# Mean-preserving spreads
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MpsPair:
    """A payoff law, independent mean-zero noise, and their exact convolution."""

    base: DiscreteFinite
    noise: DiscreteFinite
    spread: DiscreteFinite


def make_mps(base: ReturnDistribution, noise: ReturnDistribution) -> MpsPair:
    """Product-measure convolution of a finite base law with mean-zero noise.

    Preconditions: E(noise) = 0 within NOISE_MEAN_TOL and V(noise) > 0.  The
    spread keeps the base mean and gains exactly the noise variance.
    """
    base_f = as_finite(base)
    noise_f = as_finite(noise)
    mu_z = mean(noise_f)
    if abs(mu_z) > NOISE_MEAN_TOL:
        raise ValidationError(f"noise mean must be 0, got E(Z) = {mu_z!r}")
    if not (variance(noise_f) > 0.0):
        raise ValidationError("noise variance must be > 0")
    atoms = [(bv + zv, bp * zp)
             for bv, bp in base_f.atoms for zv, zp in noise_f.atoms]
    for v, _ in atoms:
        if not math.isfinite(v):
            raise ValidationError(f"spread atom {v!r} is not finite")
    return MpsPair(base=base_f, noise=noise_f, spread=DiscreteFinite(atoms))


# ---------------------------------------------------------------------------
# Second-order stochastic dominance
# ---------------------------------------------------------------------------

class Dominance(Enum):
    DOMINATES = "dominates"
    DOMINATED = "dominated"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


@dataclass(frozen=True)
class DominanceResult:
    relation: Dominance
    max_violation: float
    mean_gap: float


def sosd_dominates(x: ReturnDistribution, y: ReturnDistribution,
                   mean_tol: float = 1e-10,
                   integral_tol: float = 1e-12) -> DominanceResult:
    """Integrated-CDF test: does x second-order stochastically dominate y?

    Requires equal means within ``mean_tol``; a larger gap is reported as
    INCOMPARABLE with the gap (unequal means are a legitimate finding, not
    an error).  With equal means, x dominates y iff the running integral of
    F_y - F_x stays >= -integral_tol on the merged atom grid and is
    positive somewhere.  Exact only on finite supports; discretise
    continuous laws first (e.g. ``quantile_grid``) and widen the tolerances.
    """
    xf, yf = as_finite(x), as_finite(y)
    gap = mean(xf) - mean(yf)
    if abs(gap) > mean_tol:
        return DominanceResult(Dominance.INCOMPARABLE, 0.0, gap)
    grid = np.unique(np.concatenate([np.asarray(xf.values), np.asarray(yf.values)]))
    fx = _cdf_on(xf, grid)
    fy = _cdf_on(yf, grid)
    diff = fy - fx                       # piecewise-constant between grid points
    widths = np.diff(grid)
    running = np.concatenate([[0.0], np.cumsum(diff[:-1] * widths)])
    t_min = float(np.min(running))
    t_max = float(np.max(running))
    if t_min >= -integral_tol and t_max > integral_tol:
        return DominanceResult(Dominance.DOMINATES, max(0.0, -t_min), gap)
    if t_max <= integral_tol and t_min < -integral_tol:
        return DominanceResult(Dominance.DOMINATED, max(0.0, t_max), gap)
    if t_min >= -integral_tol and t_max <= integral_tol:
        return DominanceResult(Dominance.EQUAL, max(abs(t_min), abs(t_max)), gap)
    return DominanceResult(Dominance.INCOMPARABLE, max(-t_min, t_max), gap)


def _cdf_on(dist: DiscreteFinite, grid: np.ndarray) -> np.ndarray:
    vals = np.asarray(dist.values)
    cum = np.cumsum(dist.probs)
    idx = np.searchsorted(vals, grid + ATOM_MERGE_TOL, side="left")
    out = np.empty_like(grid)
    out[idx == 0] = 0.0
    nz = idx > 0
    out[nz] = cum[idx[nz] - 1]
    return out


# ---------------------------------------------------------------------------
# Taylor gap
# ---------------------------------------------------------------------------

def taylor_gap(u: UtilityFunction, pair: MpsPair) -> tuple[float, float]:
    """Second-order estimate vs exact expected-utility loss from a spread.

    Returns (approx, exact) where approx = 0.5*E[u''(base)]*V(noise) and
    exact = E[u(spread)] - E[u(base)]; both are <= 0 for concave u, and for
    quadratic u they coincide (third-order terms vanish).  Sums are
    correctly rounded (fsum) so the quadratic identity survives the heavy
    cancellation at small noise scales.
    """
    base, spread, noise = pair.base, pair.spread, pair.noise

    def _eu(law: DiscreteFinite, fn) -> float:
        y = np.asarray(fn(u, np.asarray(law.values)))
        return math.fsum((np.asarray(law.probs) * y).tolist())

    eu_base = _eu(base, eval_utility)
    eu_spread = _eu(spread, eval_utility)
    e_d2 = _eu(base, deriv2)
    var_z = math.fsum(p * v * v for v, p in noise.atoms)  # E(Z)=0 by construction
    return 0.5 * e_d2 * var_z, eu_spread - eu_base
