"""Bracketing solvers for indifference points and the Pareto reallocation.

All roots are located by plain bisection: every objective here is cheap,
continuous and monotone in the solved variable, and bisection carries a
predictable iteration bound of ceil(log2(width/tol)) + 2.  The indifference
share alpha* additionally gets a closed-form cross-check because the
financier gap is affine in alpha.

Utility-indifference equations are solved per unit of funds (Z_i = 1): a
utility equality is not invariant under scaling its two arguments by
different fund amounts, so the rate-level normalisation is the only
well-posed reading.  lambda and gamma are fixed algebraically by their
linear constraints (1 - alpha + lambda = 1 - alpha*, alpha + gamma =
alpha*); only the fixed rates D_P and D_Y are genuinely free and searched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .contracts import FundAllocation, financier_gap
from .errors import NoRootError, ValidationError
from .returns import (QuadratureSpec, ReturnDistribution, check_return_support,
                      mean, partial_expectation_call, partial_expectation_min)
from .utility import UtilityFunction, expected_utility

DEFAULT_TOL_RATE = 1e-10
DEFAULT_TOL_PAYOFF = 1e-9      # scaled by L
DEFAULT_MAX_ITER = 200
UTILITY_TOL = 1e-9             # weak-improvement slack on expected utilities
MEMBERSHIP_EPS = 1e-9          # strictness margin for open-interval memberships

_BOUNDARY_EPS = 1e-14


class SolveTarget(Enum):
    ALPHA_STAR = "AlphaStar"
    D_STAR = "DStar"
    DP_INDIFFERENCE = "DP_Indifference"
    DY_INDIFFERENCE = "DY_Indifference"
    LAMBDA = "Lambda"
    GAMMA = "Gamma"


@dataclass(frozen=True)
class SolveReport:
    target: SolveTarget
    value: float
    residual: float
    bracket: tuple[float, float]
    iterations: int
    premise_flags: dict[str, bool]
    status: str                      # "success" | "boundary" | "no_root" | "premise_failure"
    extra: dict[str, float] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status in ("success", "boundary")


def bisect(fn: Callable[[float], float], lo: float, hi: float, *,
           xtol: float, max_iter: int = DEFAULT_MAX_ITER) -> tuple[float, float, int, tuple[float, float]]:
    """Locate a sign change of fn on [lo, hi]; fn(lo) and fn(hi) must straddle 0.

    Returns (root, fn(root), iterations, final_bracket).
    """
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo, 0.0, 0, (lo, hi)
    if f_hi == 0.0:
        return hi, 0.0, 0, (lo, hi)
    if (f_lo < 0.0) == (f_hi < 0.0):
        raise NoRootError(
            f"no sign change on [{lo}, {hi}]: f(lo)={f_lo!r}, f(hi)={f_hi!r}",
            lo=lo, hi=hi, f_lo=f_lo, f_hi=f_hi)
    iters = 0
    mid, f_mid = lo, f_lo
    while hi - lo > xtol and iters < max_iter:
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        iters += 1
        if f_mid == 0.0:
            return mid, 0.0, iters, (lo, hi)
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    mid = 0.5 * (lo + hi)
    return mid, fn(mid), iters, (lo, hi)


# ---------------------------------------------------------------------------
# alpha* and D*
# ---------------------------------------------------------------------------

def solve_alpha_star(alloc: FundAllocation, dist: ReturnDistribution, d: float,
                     quad: QuadratureSpec | None = None,
                     tol: float = DEFAULT_TOL_RATE) -> SolveReport:
    """Share alpha* in [0, 1] equalising the financier's expected payoffs.

    The gap h(alpha) = E(P2) - E(P1) is evaluated through the generic
    expectation path and bisected on [0, 1]; since h is affine the closed
    form alpha* = 1 - (1-beta) E[min(R,d)] / (beta E(R)) is cross-checked
    and a disagreement beyond 10*tol is flagged.  h(0) > 0 (possible only
    for beta < 1/2) means no indifference share exists in [0, 1] and raises
    NoRootError; h(0) = 0 is reported as a boundary solution alpha* = 0.
    """
    check_return_support(dist)
    h = lambda a: financier_gap(alloc, dist, d, a, quad)
    h0, h1 = h(0.0), h(1.0)
    beta_ge_half = alloc.beta >= 0.5
    e_min = partial_expectation_min(dist, d, quad)
    mu = mean(dist, quad)
    closed = 1.0 - (1.0 - alloc.beta) * e_min / (alloc.beta * mu)
    extra = {"closed_form": closed, "gap_at_0": h0, "gap_at_1": h1}
    if h0 > _BOUNDARY_EPS * alloc.L:
        raise NoRootError(
            "financier gap is already positive at alpha = 0 (needs beta >= 1/2, "
            f"or a smaller fixed rate): h(0) = {h0!r}",
            lo=0.0, hi=1.0, f_lo=h0, f_hi=h1)
    if abs(h0) <= _BOUNDARY_EPS * alloc.L:
        flags = {"beta_ge_half": beta_ge_half, "sign_change_found": False,
                 "closed_form_agrees": abs(closed) <= 10.0 * max(tol, 1e-12)}
        return SolveReport(SolveTarget.ALPHA_STAR, 0.0, abs(h0), (0.0, 1.0), 0,
                           flags, "boundary", extra)
    root, f_root, iters, bracket = bisect(h, 0.0, 1.0, xtol=tol)
    flags = {"beta_ge_half": beta_ge_half, "sign_change_found": True,
             "closed_form_agrees": abs(closed - root) <= 10.0 * tol}
    return SolveReport(SolveTarget.ALPHA_STAR, root, abs(f_root), bracket, iters,
                       flags, "success", extra)


def solve_d_star(alloc: FundAllocation, dist: ReturnDistribution, alpha: float,
                 quad: QuadratureSpec | None = None,
                 tol: float = DEFAULT_TOL_RATE) -> SolveReport:
    """Rate D* equalising the investors' expected aggregate payoffs.

    Solves Z2 E[max(R - D, 0)] = alpha Z1 E(R) on D in (0, 1).  The left
    side is continuous and non-increasing in D, so a root exists iff the
    target lies within [0, Z2 E[max(R - eps, 0)]]; otherwise NoRootError
    reports the achievable interval.
    """
    check_return_support(dist)
    if not (0.0 < alpha < 1.0):
        raise ValidationError(f"share alpha must lie in (0, 1), got {alpha!r}")
    target = alpha * alloc.z1 * mean(dist, quad)
    g = lambda d: alloc.z2 * partial_expectation_call(dist, d, quad) - target
    d_lo, d_hi = 1e-12, 1.0 - 1e-12
    g_lo = g(d_lo)
    if g_lo < 0.0:
        raise NoRootError(
            f"target investor payoff {target!r} exceeds the achievable maximum "
            f"{g_lo + target!r}", lo=d_lo, hi=d_hi, f_lo=g_lo,
            achievable=(0.0, g_lo + target))
    root, f_root, iters, bracket = bisect(g, d_lo, d_hi, xtol=tol)
    flags = {"target_achievable": True}
    return SolveReport(SolveTarget.D_STAR, root, abs(f_root), bracket, iters,
                       flags, "success", {"target": target})


# ---------------------------------------------------------------------------
# Utility indifference
# ---------------------------------------------------------------------------

def solve_indifference_rate(u: UtilityFunction, dist: ReturnDistribution,
                            side: str, share: float, boost: float = 1.0,
                            quad: QuadratureSpec | None = None,
                            tol: float = DEFAULT_TOL_RATE) -> SolveReport:
    """Rate D making the fixed-rate leg utility-indifferent to a share of R.

    Per unit of funds: financier side solves E[u(min(boost*R, D))] =
    E[u(share*R)], investor side solves E[u(max(boost*R - D, 0))] =
    E[u(share*R)], each bisected on D in (0, boost*hi).
    """
    check_return_support(dist)
    if side not in ("financier", "investor"):
        raise ValidationError(f"side must be 'financier' or 'investor', got {side!r}")
    if not (0.0 < share < 1.0):
        raise ValidationError(f"share must lie in (0, 1), got {share!r}")
    if not (boost >= 1.0):
        raise ValidationError(f"boost must be >= 1, got {boost!r}")
    target = expected_utility(u, dist, lambda r: share * r, quad)
    if side == "financier":
        def gap(d: float) -> float:
            return expected_utility(u, dist, lambda r: np.minimum(boost * r, d),
                                    quad, breakpoints=(d / boost,)) - target
    else:
        def gap(d: float) -> float:
            return expected_utility(u, dist, lambda r: np.maximum(boost * r - d, 0.0),
                                    quad, breakpoints=(d / boost,)) - target
    d_lo, d_hi = 1e-12, boost * dist.hi
    try:
        root, f_root, iters, bracket = bisect(gap, d_lo, d_hi, xtol=tol)
    except NoRootError as err:
        raise NoRootError(
            f"{side} indifference rate not bracketed for share {share}, boost {boost}: "
            f"utility gap {err.f_lo!r} at D={d_lo}, {err.f_hi!r} at D={d_hi}",
            lo=d_lo, hi=d_hi, f_lo=err.f_lo, f_hi=err.f_hi) from err
    tgt = (SolveTarget.DP_INDIFFERENCE if side == "financier"
           else SolveTarget.DY_INDIFFERENCE)
    return SolveReport(tgt, root, abs(f_root), bracket, iters,
                       {"bracketed": True}, "success",
                       {"share": share, "boost": boost, "target_utility": target})


# ---------------------------------------------------------------------------
# Pareto reallocation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HalfSplitCheck:
    """One half-split reallocation reading, with both residual conventions.

    ``resolved`` re-solves the rate under the boosted contract;
    ``reused_rate_residual`` is the residual of the same equation evaluated
    at the unboosted rate.  Improvement flags compare against the party's
    fixed-rate utility at the unboosted indifference rate.
    """

    branch: str                      # "financier" | "investor"
    boost: float
    share: float
    resolved: SolveReport | None
    reused_rate_residual: float
    baseline_fr_utility: float
    boosted_fr_utility: float
    sr_utility: float
    weakly_improves: bool
    strictly_improves: bool


@dataclass(frozen=True)
class ParetoConstruction:
    alpha_star: SolveReport
    lambda_report: SolveReport
    gamma_report: SolveReport
    dp_report: SolveReport | None
    dy_report: SolveReport | None
    half_splits: tuple[HalfSplitCheck, ...]


def _algebraic_report(target: SolveTarget, value: float, alpha_star: float,
                      flags: dict[str, bool]) -> SolveReport:
    status = "success" if all(flags.values()) else "premise_failure"
    return SolveReport(target, value, 0.0, (0.0, max(alpha_star, 0.0)), 0,
                       flags, status)


def _failed_report(target: SolveTarget, flags: dict[str, bool]) -> SolveReport:
    return SolveReport(target, math.nan, math.inf, (0.0, 0.0), 0, flags, "no_root")


def pareto_construct(alloc: FundAllocation, dist: ReturnDistribution,
                     u: UtilityFunction, d: float, alpha: float,
                     quad: QuadratureSpec | None = None,
                     tol: float = DEFAULT_TOL_RATE) -> ParetoConstruction:
    """Build the reallocation parameters and check the Pareto conditions.

    From alpha* (solved at the scenario's fixed rate d): lambda = alpha -
    alpha* for the financier branch (alpha in ]alpha*, 1-alpha*[) and gamma
    = alpha* - alpha for the investor branch (alpha in ]0, alpha*[), each
    with its ]0, alpha*[ membership recorded as a premise flag.  D_P and
    D_Y are the unboosted utility-indifference rates against shares
    1-alpha* and alpha*.  For each branch whose premises hold, the
    half-split reallocation (boost 1 + lambda/2 against share 1 - alpha +
    lambda/2, or boost 1 + gamma/2 against share alpha + gamma/2) is
    re-solved and also evaluated at the unboosted rate.

    Premise violations produce reports with flags down, never exceptions,
    so a scenario grid can aggregate where the conditions bind.
    """
    if not (0.0 < alpha < 1.0):
        raise ValidationError(f"share alpha must lie in (0, 1), got {alpha!r}")
    no_flags = {"alpha_star_found": False, "alpha_star_lt_half": False}
    try:
        astar_rep = solve_alpha_star(alloc, dist, d, quad, tol)
    except NoRootError:
        failed = _failed_report(SolveTarget.ALPHA_STAR, dict(no_flags))
        lam = _algebraic_report(SolveTarget.LAMBDA, math.nan, 0.0,
                                {**no_flags, "alpha_in_interval": False,
                                 "lambda_in_interval": False})
        gam = _algebraic_report(SolveTarget.GAMMA, math.nan, 0.0,
                                {**no_flags, "alpha_in_interval": False,
                                 "gamma_in_interval": False})
        return ParetoConstruction(failed, lam, gam, None, None, ())

    # the gap is affine in alpha: the agreeing closed form is sharper than
    # the bisection root, and the interval memberships below are sensitive
    # to alpha* at the alpha = alpha* boundary
    astar = (astar_rep.extra["closed_form"]
             if astar_rep.premise_flags.get("closed_form_agrees")
             else astar_rep.value)
    found = astar_rep.converged
    interior = found and 0.0 < astar < 1.0
    lt_half = found and 0.0 < astar < 0.5
    common = {"alpha_star_found": found, "alpha_star_lt_half": lt_half}

    def _open(lo: float, x: float, hi: float) -> bool:
        # strict membership with a margin, so solver residual cannot smuggle
        # a boundary case (alpha = alpha*) into an open interval
        return lo + MEMBERSHIP_EPS < x < hi - MEMBERSHIP_EPS

    lam_val = alpha - astar
    lam_flags = {**common,
                 "alpha_in_interval": lt_half and _open(astar, alpha, 1.0 - astar),
                 "lambda_in_interval": lt_half and _open(0.0, lam_val, astar)}
    lam_rep = _algebraic_report(SolveTarget.LAMBDA, lam_val, astar, lam_flags)

    gam_val = astar - alpha
    gam_flags = {**common,
                 "alpha_in_interval": lt_half and _open(0.0, alpha, astar),
                 "gamma_in_interval": lt_half and _open(0.0, gam_val, astar)}
    gam_rep = _algebraic_report(SolveTarget.GAMMA, gam_val, astar, gam_flags)

    dp_rep = dy_rep = None
    if interior:
        try:
            dp_rep = solve_indifference_rate(u, dist, "financier", 1.0 - astar,
                                             1.0, quad, tol)
        except NoRootError:
            dp_rep = _failed_report(SolveTarget.DP_INDIFFERENCE, {"bracketed": False})
        try:
            dy_rep = solve_indifference_rate(u, dist, "investor", astar,
                                             1.0, quad, tol)
        except NoRootError:
            dy_rep = _failed_report(SolveTarget.DY_INDIFFERENCE, {"bracketed": False})

    checks: list[HalfSplitCheck] = []
    if (all(lam_flags.values()) and dp_rep is not None and dp_rep.converged):
        checks.append(_half_split(u, dist, quad, tol, branch="financier",
                                  step=lam_val, alpha=alpha, base_rate=dp_rep.value,
                                  sr_share=1.0 - astar))
    if (all(gam_flags.values()) and dy_rep is not None and dy_rep.converged):
        checks.append(_half_split(u, dist, quad, tol, branch="investor",
                                  step=gam_val, alpha=alpha, base_rate=dy_rep.value,
                                  sr_share=astar))
    return ParetoConstruction(astar_rep, lam_rep, gam_rep, dp_rep, dy_rep,
                              tuple(checks))


def _half_split(u: UtilityFunction, dist: ReturnDistribution,
                quad: QuadratureSpec | None, tol: float, *, branch: str,
                step: float, alpha: float, base_rate: float,
                sr_share: float) -> HalfSplitCheck:
    boost = 1.0 + 0.5 * step
    share = (1.0 - alpha + 0.5 * step) if branch == "financier" else (alpha + 0.5 * step)
    if branch == "financier":
        baseline = expected_utility(u, dist, lambda r: np.minimum(r, base_rate),
                                    quad, breakpoints=(base_rate,))
        boosted = expected_utility(u, dist, lambda r: np.minimum(boost * r, base_rate),
                                   quad, breakpoints=(base_rate / boost,))
    else:
        baseline = expected_utility(u, dist, lambda r: np.maximum(r - base_rate, 0.0),
                                    quad, breakpoints=(base_rate,))
        boosted = expected_utility(u, dist, lambda r: np.maximum(boost * r - base_rate, 0.0),
                                   quad, breakpoints=(base_rate / boost,))
    sr_util = expected_utility(u, dist, lambda r: sr_share * r, quad)
    side_target = expected_utility(u, dist, lambda r: share * r, quad)
    try:
        resolved = solve_indifference_rate(u, dist, branch, share, boost, quad, tol)
    except NoRootError:
        resolved = None
    return HalfSplitCheck(
        branch=branch, boost=boost, share=share, resolved=resolved,
        reused_rate_residual=abs(boosted - side_target),
        baseline_fr_utility=baseline, boosted_fr_utility=boosted,
        sr_utility=sr_util,
        weakly_improves=sr_util >= baseline - UTILITY_TOL,
        strictly_improves=boosted >= baseline + UTILITY_TOL,
    )
