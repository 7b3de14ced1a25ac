"""Distributions of the project return rate on the open unit interval.

Every expectation in the engine flows through :func:`expect`, which uses one
of two paths: finite supports are enumerated in ascending atom order (so a
hand enumeration reproduces the result bit for bit), and continuous families
are integrated with a fixed-order Gauss-Legendre rule.  Payoff transforms
with kinks (the min/max maps) must declare the kink abscissae so the
integration interval is split there; a polynomial rule straddling a kink
loses most of its accuracy.

Return laws live strictly inside (0, 1).  The continuous families enforce
that at construction (families native to [0, 1] are pulled inside by
``SUPPORT_EPS``).  ``Degenerate`` and ``DiscreteFinite`` are dual-use: they
also represent payoff pushforwards and mean-zero noise, whose atoms may sit
at 0 or below, so for them the unit-interval constraint is checked where a
value is actually used as a return law (:func:`check_return_support`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Union

import numpy as np
from scipy import stats as _sps

from .errors import EvaluationError, ValidationError

SUPPORT_EPS = 1e-9
ATOM_MERGE_TOL = 1e-14
PROB_SUM_TOL = 1e-12

Transform = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureSpec:
    """Fixed-order Gauss-Legendre rule for continuous kinds.

    Discrete kinds ignore the node count and are enumerated exactly.  On any
    subinterval [a, b] the rule's weights sum to b - a.
    """

    node_count: int = 256

    def __post_init__(self) -> None:
        if not isinstance(self.node_count, int) or self.node_count < 2:
            raise ValidationError(
                f"quadrature node_count must be an integer >= 2, got {self.node_count!r}")


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [lo, hi]; the weights sum to hi - lo."""
    t, w = _leggauss(n)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * t, half * w


# ---------------------------------------------------------------------------
# Distribution kinds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Degenerate:
    """Point mass at ``r0``."""

    r0: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.r0):
            raise ValidationError(f"degenerate point must be finite, got {self.r0!r}")

    @property
    def lo(self) -> float:
        return self.r0

    @property
    def hi(self) -> float:
        return self.r0


class DiscreteFinite:
    """Finite discrete law given as (value, probability) atoms.

    Atoms are sorted ascending by value and near-duplicates (within
    ``ATOM_MERGE_TOL``) are merged by summing probabilities; enumeration
    order is therefore canonical.  Probabilities must be strictly positive
    and sum to 1 within ``PROB_SUM_TOL``.
    """

    __slots__ = ("values", "probs")

    def __init__(self, atoms: Iterable[tuple[float, float]]):
        pairs = sorted((float(v), float(p)) for v, p in atoms)
        if not pairs:
            raise ValidationError("discrete law needs at least one atom")
        values: list[float] = []
        probs: list[float] = []
        for v, p in pairs:
            if not math.isfinite(v):
                raise ValidationError(f"atom value must be finite, got {v!r}")
            if not (p > 0.0):
                raise ValidationError(f"atom probability must be > 0, got {p!r} at {v!r}")
            if values and v - values[-1] <= ATOM_MERGE_TOL:
                probs[-1] += p
            else:
                values.append(v)
                probs.append(p)
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"atom probabilities sum to {total!r}, expected 1")
        super().__setattr__("values", tuple(values))
        super().__setattr__("probs", tuple(probs))

    def __setattr__(self, name, value):  # pragma: no cover - guards mutation
        raise AttributeError("DiscreteFinite is immutable")

    @property
    def atoms(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self.values, self.probs))

    @property
    def lo(self) -> float:
        return self.values[0]

    @property
    def hi(self) -> float:
        return self.values[-1]

    def __eq__(self, other) -> bool:
        return (isinstance(other, DiscreteFinite)
                and self.values == other.values and self.probs == other.probs)

    def __hash__(self) -> int:
        return hash((self.values, self.probs))

    def __repr__(self) -> str:
        inner = ", ".join(f"{v!r}:{p!r}" for v, p in self.atoms)
        return f"DiscreteFinite({{{inner}}})"


def _clamp_unit(lo: float, hi: float) -> tuple[float, float]:
    lo = max(float(lo), SUPPORT_EPS)
    hi = min(float(hi), 1.0 - SUPPORT_EPS)
    return lo, hi


@dataclass(frozen=True)
class Uniform:
    """Uniform law on [lo, hi] inside the unit interval."""

    lo: float
    hi: float

    def __init__(self, lo: float = 0.0, hi: float = 1.0):
        lo, hi = _clamp_unit(lo, hi)
        if not lo < hi:
            raise ValidationError(f"uniform needs lo < hi inside (0,1), got [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class ScaledBeta:
    """Beta(a, b) law rescaled onto [lo, hi] inside the unit interval.

    Accuracy of the quadrature path degrades for a < 1 or b < 1 (the density
    is singular at an endpoint); shapes >= 1 integrate to machine precision.
    """

    a: float
    b: float
    lo: float
    hi: float

    def __init__(self, a: float, b: float, lo: float = 0.0, hi: float = 1.0):
        if not (a > 0.0 and b > 0.0):
            raise ValidationError(f"beta shapes must be > 0, got a={a!r}, b={b!r}")
        lo, hi = _clamp_unit(lo, hi)
        if not lo < hi:
            raise ValidationError(f"scaled beta needs lo < hi inside (0,1), got [{lo}, {hi}]")
        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "b", float(b))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class TruncatedNormal:
    """Normal(mu, sigma) truncated to [lo, hi] inside the unit interval."""

    mu: float
    sigma: float
    lo: float
    hi: float

    def __init__(self, mu: float, sigma: float, lo: float = 0.0, hi: float = 1.0):
        if not (sigma > 0.0):
            raise ValidationError(f"sigma must be > 0, got {sigma!r}")
        lo, hi = _clamp_unit(lo, hi)
        if not lo < hi:
            raise ValidationError(
                f"truncated normal needs lo < hi inside (0,1), got [{lo}, {hi}]")
        object.__setattr__(self, "mu", float(mu))
        object.__setattr__(self, "sigma", float(sigma))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


ReturnDistribution = Union[Degenerate, DiscreteFinite, Uniform, ScaledBeta, TruncatedNormal]

_CONTINUOUS = (Uniform, ScaledBeta, TruncatedNormal)


def kind_name(dist: ReturnDistribution) -> str:
    return {Degenerate: "degenerate", DiscreteFinite: "discrete", Uniform: "uniform",
            ScaledBeta: "scaled_beta", TruncatedNormal: "truncated_normal"}[type(dist)]


def is_discrete(dist: ReturnDistribution) -> bool:
    return isinstance(dist, (Degenerate, DiscreteFinite))


def support(dist: ReturnDistribution) -> tuple[float, float]:
    return dist.lo, dist.hi


def check_return_support(dist: ReturnDistribution) -> None:
    """Require the support to lie strictly inside (0, 1).

    Construction already guarantees this for the continuous families; point
    masses and discrete laws are dual-use (payoff/noise laws), so the check
    runs where they enter as return laws.
    """
    if not (0.0 < dist.lo and dist.hi < 1.0):
        raise ValidationError(
            f"{kind_name(dist)} support [{dist.lo}, {dist.hi}] must lie strictly inside (0, 1)")


def as_finite(dist: ReturnDistribution) -> DiscreteFinite:
    """Exact finite-atom view of a discrete-kind distribution."""
    if isinstance(dist, DiscreteFinite):
        return dist
    if isinstance(dist, Degenerate):
        return DiscreteFinite([(dist.r0, 1.0)])
    raise ValidationError(f"{kind_name(dist)} has no exact finite-atom form")


@lru_cache(maxsize=256)
def _frozen(dist: ReturnDistribution):
    if isinstance(dist, ScaledBeta):
        return _sps.beta(dist.a, dist.b, loc=dist.lo, scale=dist.hi - dist.lo)
    if isinstance(dist, TruncatedNormal):
        a = (dist.lo - dist.mu) / dist.sigma
        b = (dist.hi - dist.mu) / dist.sigma
        return _sps.truncnorm(a, b, loc=dist.mu, scale=dist.sigma)
    raise ValidationError(f"no density for {kind_name(dist)}")


def _pdf(dist: ReturnDistribution, x: np.ndarray) -> np.ndarray:
    if isinstance(dist, Uniform):
        return np.full_like(x, 1.0 / (dist.hi - dist.lo))
    return _frozen(dist).pdf(x)


# ---------------------------------------------------------------------------
# Expectations
# ---------------------------------------------------------------------------

def _apply(f: Transform, x: np.ndarray) -> np.ndarray:
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    return y


def _check_finite(x: np.ndarray, y: np.ndarray) -> None:
    bad = ~np.isfinite(y)
    if np.any(bad):
        r = float(np.asarray(x)[bad][0])
        raise EvaluationError(f"transform returned a non-finite value at r={r!r}")


def expect(dist: ReturnDistribution, f: Transform,
           quad: QuadratureSpec | None = None,
           breakpoints: Sequence[float] = ()) -> float:
    """E[f(R)] by exact enumeration (discrete) or split Gauss-Legendre.

    ``breakpoints`` lists abscissae where f is non-smooth; the integration
    interval is split there so no quadrature panel straddles a kink.  The
    transform must be vectorised over numpy arrays.
    """
    quad = quad or DEFAULT_QUAD
    if is_discrete(dist):
        fin = as_finite(dist)
        vals = np.asarray(fin.values)
        y = _apply(f, vals)
        _check_finite(vals, y)
        acc = 0.0
        for p, fv in zip(fin.probs, y.tolist()):
            acc += p * fv
        return acc
    lo, hi = dist.lo, dist.hi
    cuts = sorted({float(b) for b in breakpoints if lo < float(b) < hi})
    edges = [lo, *cuts, hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(a, b, quad.node_count)
        y = _apply(f, x)
        _check_finite(x, y)
        total += float(np.dot(w, y * _pdf(dist, x)))
    return total


def mean(dist: ReturnDistribution, quad: QuadratureSpec | None = None) -> float:
    """E[R]; exact for point masses and discrete laws, quadrature otherwise."""
    return expect(dist, lambda r: r, quad)


def variance(dist: ReturnDistribution, quad: QuadratureSpec | None = None) -> float:
    """V[R] >= 0 via the central second moment."""
    m = mean(dist, quad)
    return expect(dist, lambda r: (r - m) ** 2, quad)


def partial_expectation_min(dist: ReturnDistribution, d: float,
                            quad: QuadratureSpec | None = None) -> float:
    """E[min(R, d)] for a rate d in (0, 1); integration splits at d."""
    _check_rate(d, "d")
    return expect(dist, lambda r: np.minimum(r, d), quad, breakpoints=(d,))


def partial_expectation_call(dist: ReturnDistribution, d: float,
                             quad: QuadratureSpec | None = None) -> float:
    """E[max(R - d, 0)] for a rate d in (0, 1); integration splits at d."""
    _check_rate(d, "d")
    return expect(dist, lambda r: np.maximum(r - d, 0.0), quad, breakpoints=(d,))


def _check_rate(x: float, name: str) -> None:
    if not (0.0 < x < 1.0):
        raise ValidationError(f"{name} must lie in (0, 1), got {x!r}")


# ---------------------------------------------------------------------------
# Sampling and quantiles
# ---------------------------------------------------------------------------

def sample(dist: ReturnDistribution, seed: int, n: int) -> np.ndarray:
    """n i.i.d. draws, deterministic for a given seed.

    Each call derives an isolated generator from the seed; there is no
    shared generator state.
    """
    if n < 1:
        raise ValidationError(f"sample count must be >= 1, got {n!r}")
    rng = np.random.default_rng(seed)
    if isinstance(dist, Degenerate):
        return np.full(n, dist.r0)
    if isinstance(dist, DiscreteFinite):
        idx = rng.choice(len(dist.values), size=n, p=np.asarray(dist.probs))
        return np.asarray(dist.values)[idx]
    if isinstance(dist, Uniform):
        return rng.uniform(dist.lo, dist.hi, n)
    if isinstance(dist, ScaledBeta):
        return dist.lo + (dist.hi - dist.lo) * rng.beta(dist.a, dist.b, n)
    # truncated normal through the inverse CDF keeps draws inside [lo, hi]
    return np.asarray(_frozen(dist).ppf(rng.random(n)), dtype=float)


def quantile(dist: ReturnDistribution, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if np.any((q < 0.0) | (q > 1.0)):
        raise ValidationError("quantile levels must lie in [0, 1]")
    if isinstance(dist, Degenerate):
        return np.full_like(q, dist.r0)
    if isinstance(dist, DiscreteFinite):
        cum = np.cumsum(dist.probs)
        idx = np.minimum(np.searchsorted(cum, q, side="left"), len(dist.values) - 1)
        return np.asarray(dist.values)[idx]
    if isinstance(dist, Uniform):
        return dist.lo + (dist.hi - dist.lo) * q
    return np.asarray(_frozen(dist).ppf(q), dtype=float)


def quantile_grid(dist: ReturnDistribution, n: int = 512) -> DiscreteFinite:
    """Equal-weight midpoint-quantile discretisation; exact kinds pass through."""
    if is_discrete(dist):
        return as_finite(dist)
    if n < 2:
        raise ValidationError(f"quantile grid needs n >= 2, got {n!r}")
    q = (np.arange(n) + 0.5) / n
    vals = quantile(dist, q)
    return DiscreteFinite([(float(v), 1.0 / n) for v in vals])
