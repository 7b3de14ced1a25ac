"""Scenario-grid verification of the engine's three headline claims.

Each claim check distinguishes *premise failures* (a condition of the claim
does not hold for the scenario, e.g. beta < 1/2, a boundary indifference
share, or unequal means where a mean-preserving spread is required) from
*conclusion failures* (premises hold but the asserted inequality breaks).
The distinction is the point of the harness: it maps where the conditions
actually bind, and a conclusion failure on valid premises is either a build
defect or a genuine counterexample.

Claims:

* ``P3_1`` an indifference share alpha* exists and the financier gap is
  negative below it, positive above it;
* ``P4_1`` adding independent mean-zero noise to the investor's payoff law
  lowers expected utility for every concave utility in the suite (and the
  base law SOSD-dominates the spread); the left-hand comparison against the
  financier's fixed-rate payoff law requires equal means, which is audited
  and reported rather than assumed;
* ``P5_1`` the reallocation construction (lambda/gamma, indifference rates
  D_P/D_Y, half-split boosts) converges and weakly improves both parties,
  with a strict improvement from the boost.

Every expectation can additionally be cross-checked against Monte Carlo at
the scenario seed; agreement means |quadrature - estimate| <= 4 standard
errors.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .contracts import FundAllocation, financier_gap
from .errors import FinshareError, NoRootError, ValidationError
from .returns import (DiscreteFinite, QuadratureSpec, ReturnDistribution,
                      check_return_support, is_discrete, kind_name, mean,
                      partial_expectation_min, quantile_grid, sample)
from .sharing import (Dominance, MpsPair, induced_distribution, make_mps,
                      sosd_dominates, sr_investor, taylor_gap)
from .solvers import (ParetoConstruction, pareto_construct, solve_alpha_star,
                      solve_d_star)
from .utility import UtilityFunction, eval_utility, expected_utility, with_domain

PROPOSITIONS = ("P3_1", "P4_1", "P5_1")

DOMAIN_HEADROOM = 1.3          # payoff domain cap: boosts stay below 1 + alpha*/2 < 1.25
DISCRETIZE_ATOMS = 512
INDIFFERENCE_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class Scenario:
    id: str
    alloc: FundAllocation
    dist: ReturnDistribution
    d: float
    alpha: float
    utility: UtilityFunction
    quad: QuadratureSpec = QuadratureSpec()
    seed: int = 0

    def __post_init__(self) -> None:
        check_return_support(self.dist)
        if not (0.0 < self.d < 1.0):
            raise ValidationError(f"scenario rate d must lie in (0, 1), got {self.d!r}")
        if not (0.0 < self.alpha < 1.0):
            raise ValidationError(f"scenario share alpha must lie in (0, 1), got {self.alpha!r}")


@dataclass(frozen=True)
class McCheck:
    estimate: float
    std_error: float
    agrees: bool


@dataclass(frozen=True)
class VerificationRecord:
    scenario_id: str
    proposition: str
    premises: dict[str, bool]
    conclusion_holds: bool | None     # None unless every premise holds
    witness: dict[str, float | str]
    mc: McCheck | None
    status: str                       # "pass" | "premise_failure" | "conclusion_failure" | "error"
    error: str | None = None


def scenario_seed(master: int, index: int) -> int:
    """Per-scenario seed: splitmix64 of the master seed advanced by index+1."""
    mask = (1 << 64) - 1
    z = (master + (index + 1) * 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return (z ^ (z >> 31)) & mask


def _mc_check(quad_value: float, values: np.ndarray) -> McCheck:
    n = values.size
    est = float(values.mean())
    se = float(values.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    # absolute floor keeps (near-)degenerate laws from failing on summation noise
    gate = max(4.0 * se, 1e-12 * max(1.0, abs(quad_value)))
    return McCheck(est, se, abs(quad_value - est) <= gate)


def _record(sc: Scenario, prop: str, premises: dict[str, bool],
            conclusion: bool | None, witness: dict[str, float],
            mc: McCheck | None) -> VerificationRecord:
    if not all(premises.values()):
        return VerificationRecord(sc.id, prop, premises, None, witness, mc,
                                  "premise_failure")
    status = "pass" if conclusion else "conclusion_failure"
    return VerificationRecord(sc.id, prop, premises, bool(conclusion), witness,
                              mc, status)


def scenario_utility(sc: Scenario) -> UtilityFunction:
    """Scenario utility re-domained to cover every payoff rate in play."""
    return with_domain(sc.utility, 0.0, DOMAIN_HEADROOM * sc.dist.hi * (1.0 + 1e-6))


def _utility_suite(sc: Scenario, x_hi: float) -> list[UtilityFunction]:
    dom_hi = x_hi * (1.0 + 1e-6)
    suite = [with_domain(sc.utility, 0.0, dom_hi)]
    defaults = {"cara": 10.0, "quadratic": 0.5, "power": 0.5, "log_shift": 0.05}
    for family, param in defaults.items():
        if family != sc.utility.family:
            suite.append(UtilityFunction(family, param, 0.0, dom_hi))
    return suite


# ---------------------------------------------------------------------------
# Claim checks
# ---------------------------------------------------------------------------

def verify_p31(sc: Scenario, alpha_samples: int = 20,
               mc_samples: int = 0,
               draws: np.ndarray | None = None) -> VerificationRecord:
    """Indifference share existence plus the sign pattern of the gap."""
    premises = {"beta_ge_half": sc.alloc.beta >= 0.5, "root_found": False,
                "alpha_star_interior": False}
    witness: dict[str, float] = {}
    mc = None
    if mc_samples > 0:
        draws = sample(sc.dist, sc.seed, mc_samples) if draws is None else draws
        mc = _mc_check(partial_expectation_min(sc.dist, sc.d, sc.quad),
                       np.minimum(draws, sc.d))
    try:
        rep = solve_alpha_star(sc.alloc, sc.dist, sc.d, sc.quad)
    except NoRootError as err:
        witness["gap_at_0"] = float(err.f_lo) if err.f_lo is not None else math.nan
        return _record(sc, "P3_1", premises, None, witness, mc)
    premises["root_found"] = True
    astar = rep.value
    witness.update(alpha_star=astar, residual=rep.residual,
                   gap_at_0=rep.extra["gap_at_0"], gap_at_1=rep.extra["gap_at_1"],
                   boundary=float(rep.status == "boundary"))
    if rep.status == "boundary" or not (0.0 < astar < 1.0):
        # indifference sits on the boundary; the below-alpha* range is empty
        return _record(sc, "P3_1", premises, None, witness, mc)
    premises["alpha_star_interior"] = True
    below = astar * (np.arange(alpha_samples) + 0.5) / alpha_samples
    above = astar + (1.0 - astar) * (np.arange(alpha_samples) + 0.5) / alpha_samples
    h_below = [financier_gap(sc.alloc, sc.dist, sc.d, a, sc.quad) for a in below]
    h_above = [financier_gap(sc.alloc, sc.dist, sc.d, a, sc.quad) for a in above]
    witness["max_gap_below"] = max(h_below)
    witness["min_gap_above"] = min(h_above)
    conclusion = witness["max_gap_below"] < 0.0 and witness["min_gap_above"] > 0.0
    return _record(sc, "P3_1", premises, conclusion, witness, mc)


def verify_p41(sc: Scenario, noise_scale: float | None = None,
               left_pair: MpsPair | None = None,
               mc_samples: int = 0,
               draws: np.ndarray | None = None) -> VerificationRecord:
    """Risk ordering under a constructed mean-preserving spread.

    The right-hand ordering (base preferred to spread) is checked strictly
    for every utility family in the suite, together with SOSD dominance and
    Taylor-gap sign agreement.  The left-hand ordering needs the financier
    and investor payoff laws to share a mean; that premise is audited at
    (alpha*, D*) and reported in the witness as ``left_claim_status``
    (premise_failure in the generic case).  Supplying ``left_pair`` - a
    constructed equal-mean spread - checks the left ordering on it.
    """
    premises = {"root_found": False, "alpha_star_interior": False,
                "noise_fits_domain": True}
    witness: dict[str, float] = {}
    mc = None
    try:
        rep = solve_alpha_star(sc.alloc, sc.dist, sc.d, sc.quad)
    except NoRootError:
        return _record(sc, "P4_1", premises, None, witness, mc)
    premises["root_found"] = True
    # the gap is affine in alpha, so the agreeing closed form is the sharper root
    astar = (rep.extra["closed_form"]
             if rep.premise_flags.get("closed_form_agrees") else rep.value)
    witness["alpha_star"] = astar
    if rep.status == "boundary" or not (0.0 < astar < 1.0):
        return _record(sc, "P4_1", premises, None, witness, mc)
    premises["alpha_star_interior"] = True

    base_ret = sc.dist if is_discrete(sc.dist) else quantile_grid(sc.dist, DISCRETIZE_ATOMS)
    base = induced_distribution(sr_investor(astar), base_ret)
    width = base.hi - base.lo
    scale = noise_scale if noise_scale is not None else 0.1 * (width if width > 0.0 else base.hi)
    halvings = 0
    while base.lo - scale < 0.0 and halvings < 60:
        scale *= 0.5
        halvings += 1
    witness["noise_scale"] = scale
    witness["noise_halvings"] = float(halvings)
    if base.lo - scale < 0.0 or scale <= 0.0:
        premises["noise_fits_domain"] = False
        return _record(sc, "P4_1", premises, None, witness, mc)
    pair = make_mps(base, DiscreteFinite([(-scale, 0.5), (scale, 0.5)]))

    suite = _utility_suite(sc, pair.spread.hi)
    min_gap = math.inf
    taylor_signs_ok = True
    for u in suite:
        approx, exact = taylor_gap(u, pair)
        min_gap = min(min_gap, -exact)
        if not (approx < 0.0 and exact < 0.0):
            taylor_signs_ok = False
    witness["min_utility_gap"] = min_gap
    dom = sosd_dominates(pair.base, pair.spread)
    witness["sosd_dominates"] = float(dom.relation is Dominance.DOMINATES)
    conclusion = (min_gap > 0.0 and taylor_signs_ok
                  and dom.relation is Dominance.DOMINATES)

    # left-hand audit at (alpha*, D*): the proof needs equal means
    try:
        dstar = solve_d_star(sc.alloc, sc.dist, astar, sc.quad, tol=1e-13)
        e_p = partial_expectation_min(sc.dist, dstar.value, sc.quad)
        e_y = astar * mean(sc.dist, sc.quad)
        left_gap = e_p - e_y
        witness["d_star"] = dstar.value
        witness["left_mean_gap"] = left_gap
        left_ok = abs(left_gap) <= 1e-10
    except (NoRootError, FinshareError):
        witness["left_mean_gap"] = math.nan
        left_ok = False
    witness["left_equal_mean_premise"] = float(left_ok)
    if left_pair is not None:
        hi = max(pair.spread.hi, left_pair.spread.hi, left_pair.base.hi)
        left_suite = _utility_suite(sc, hi)
        left_holds = all(taylor_gap(u, left_pair)[1] < 0.0 for u in left_suite)
        witness["left_claim_status"] = "pass" if left_holds else "conclusion_failure"
        conclusion = conclusion and left_holds
    else:
        # without an equal-mean construction the left ordering is not claimed
        witness["left_claim_status"] = "premise_holds" if left_ok else "premise_failure"

    if mc_samples > 0:
        draws = sample(sc.dist, sc.seed, mc_samples) if draws is None else draws
        u0 = suite[0]
        quad_eu = expected_utility(u0, sc.dist, lambda r: astar * r, sc.quad)
        mc = _mc_check(quad_eu, np.asarray(eval_utility(u0, astar * draws)))
    return _record(sc, "P4_1", premises, conclusion, witness, mc)


def verify_p51(sc: Scenario, mc_samples: int = 0,
               draws: np.ndarray | None = None) -> VerificationRecord:
    """Pareto reallocation: construction, convergence, and improvement."""
    pc = pareto_construct(sc.alloc, sc.dist, scenario_utility(sc), sc.d,
                          sc.alpha, sc.quad)
    astar_rep = pc.alpha_star
    premises = {
        "alpha_star_found": astar_rep.converged,
        "alpha_star_lt_half": bool(astar_rep.converged
                                   and 0.0 < astar_rep.value < 0.5),
    }
    branch = None
    if premises["alpha_star_lt_half"]:
        if all(pc.gamma_report.premise_flags.values()):
            branch = "investor"
        elif all(pc.lambda_report.premise_flags.values()):
            branch = "financier"
    premises["alpha_in_branch_interval"] = branch is not None
    witness: dict[str, float] = {
        "alpha_star": astar_rep.value if astar_rep.converged else math.nan,
        "lambda": pc.lambda_report.value,
        "gamma": pc.gamma_report.value,
    }
    mc = None
    if mc_samples > 0 and astar_rep.converged and 0.0 < astar_rep.value < 1.0:
        draws = sample(sc.dist, sc.seed, mc_samples) if draws is None else draws
        share = 1.0 - astar_rep.value
        u = scenario_utility(sc)
        quad_eu = expected_utility(u, sc.dist, lambda r: share * r, sc.quad)
        mc = _mc_check(quad_eu, np.asarray(eval_utility(u, share * draws)))
    solves_ok = (pc.dp_report is not None and pc.dp_report.converged
                 and pc.dp_report.residual <= INDIFFERENCE_RESIDUAL_TOL
                 and pc.dy_report is not None and pc.dy_report.converged
                 and pc.dy_report.residual <= INDIFFERENCE_RESIDUAL_TOL)
    premises["indifference_solves_converged"] = solves_ok
    if pc.dp_report is not None and pc.dp_report.converged:
        witness["d_p"] = pc.dp_report.value
        witness["d_p_residual"] = pc.dp_report.residual
    if pc.dy_report is not None and pc.dy_report.converged:
        witness["d_y"] = pc.dy_report.value
        witness["d_y_residual"] = pc.dy_report.residual
    if not all(premises.values()):
        return _record(sc, "P5_1", premises, None, witness, mc)
    check = pc.half_splits[0]
    witness["half_split_boost"] = check.boost
    witness["half_split_share"] = check.share
    witness["baseline_fr_utility"] = check.baseline_fr_utility
    witness["boosted_fr_utility"] = check.boosted_fr_utility
    witness["sr_utility"] = check.sr_utility
    conclusion = check.weakly_improves and check.strictly_improves
    return _record(sc, "P5_1", premises, conclusion, witness, mc)


# ---------------------------------------------------------------------------
# Grid runner
# ---------------------------------------------------------------------------

def _run_one(sc: Scenario, propositions: Sequence[str], mc_samples: int,
             noise_scale: float | None) -> list[VerificationRecord]:
    draws = sample(sc.dist, sc.seed, mc_samples) if mc_samples > 0 else None
    out = []
    for prop in propositions:
        try:
            if prop == "P3_1":
                out.append(verify_p31(sc, mc_samples=mc_samples, draws=draws))
            elif prop == "P4_1":
                out.append(verify_p41(sc, noise_scale=noise_scale,
                                      mc_samples=mc_samples, draws=draws))
            elif prop == "P5_1":
                out.append(verify_p51(sc, mc_samples=mc_samples, draws=draws))
            else:
                raise FinshareError(f"unknown proposition {prop!r}")
        except Exception as exc:  # isolation: one bad scenario cannot sink the batch
            out.append(VerificationRecord(sc.id, prop, {}, None, {}, None,
                                          "error", f"{type(exc).__name__}: {exc}"))
    return out


def run_grid(batch: Sequence[Scenario],
             propositions: Sequence[str] = PROPOSITIONS,
             mc_samples: int = 0, jobs: int = 1,
             noise_scale: float | None = None
             ) -> tuple[list[VerificationRecord], dict]:
    """Run the selected claim checks over a scenario batch.

    Records come back in input order (scenario-major, then proposition)
    regardless of execution order; per-scenario failures are isolated as
    ``error`` records.  The summary counts premise failures, conclusion
    failures, passes and errors per proposition, plus Monte Carlo agreement.
    """
    for prop in propositions:
        if prop not in PROPOSITIONS:
            raise FinshareError(f"unknown proposition {prop!r}")
    if jobs > 1 and len(batch) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(
                lambda sc: _run_one(sc, propositions, mc_samples, noise_scale),
                batch))
    else:
        chunks = [_run_one(sc, propositions, mc_samples, noise_scale)
                  for sc in batch]
    records = [rec for chunk in chunks for rec in chunk]
    summary = summarize(records)
    return records, summary


def summarize(records: Iterable[VerificationRecord]) -> dict:
    per: dict[str, dict[str, int]] = {}
    mc_checked = mc_agreed = 0
    for rec in records:
        slot = per.setdefault(rec.proposition, {
            "premise_failures": 0, "conclusion_failures": 0, "passes": 0, "errors": 0})
        key = {"pass": "passes", "premise_failure": "premise_failures",
               "conclusion_failure": "conclusion_failures", "error": "errors"}[rec.status]
        slot[key] += 1
        if rec.mc is not None:
            mc_checked += 1
            mc_agreed += int(rec.mc.agrees)
    return {"per_proposition": per,
            "mc": {"checked": mc_checked, "agreed": mc_agreed}}


# ---------------------------------------------------------------------------
# Default grid and Monte Carlo cross-validation
# ---------------------------------------------------------------------------

DEFAULT_BETAS = (0.5, 0.6, 0.75, 0.9)
DEFAULT_RATES = (0.05, 0.1, 0.2, 0.4)
DEFAULT_ALPHA = 0.2
DEFAULT_FUNDS = 100.0


def default_distributions() -> dict[str, ReturnDistribution]:
    from .returns import Degenerate, ScaledBeta, TruncatedNormal, Uniform
    return {
        "degenerate": Degenerate(0.10),
        "discrete": DiscreteFinite([(0.05, 0.5), (0.15, 0.5)]),
        "uniform": Uniform(0.0, 1.0),
        "scaled_beta": ScaledBeta(2.0, 3.0, 0.0, 1.0),
        "truncated_normal": TruncatedNormal(0.15, 0.10, 0.0, 1.0),
    }


def default_utilities() -> dict[str, UtilityFunction]:
    return {
        "cara": UtilityFunction("cara", 10.0),
        "quadratic": UtilityFunction("quadratic", 0.5),
        "power": UtilityFunction("power", 0.5),
        "log_shift": UtilityFunction("log_shift", 0.05),
    }


def default_grid(master_seed: int = 20240817) -> list[Scenario]:
    """5 distribution kinds x 4 utilities x 4 betas x 4 rates, alpha = 0.2."""
    scenarios = []
    index = 0
    for dist_name, dist in default_distributions().items():
        for util_name, u in default_utilities().items():
            for beta in DEFAULT_BETAS:
                for d in DEFAULT_RATES:
                    scenarios.append(Scenario(
                        id=f"s{index:04d}_{dist_name}_{util_name}_b{beta}_d{d}",
                        alloc=FundAllocation(DEFAULT_FUNDS, beta),
                        dist=dist, d=d, alpha=DEFAULT_ALPHA, utility=u,
                        seed=scenario_seed(master_seed, index)))
                    index += 1
    return scenarios


@dataclass(frozen=True)
class ExpectationCheck:
    scenario_id: str
    name: str
    quadrature: float
    mc: McCheck


def mc_cross_validate(scenarios: Sequence[Scenario], n: int
                      ) -> list[ExpectationCheck]:
    """Per-expectation quadrature vs Monte Carlo agreement at 4 sigma.

    One draw batch per scenario feeds all of its expectation checks: the
    plain mean, both kinked partial expectations at the scenario rate, and
    the expected utility of the investor's share of the return.
    """
    from .returns import partial_expectation_call
    out = []
    for sc in scenarios:
        draws = sample(sc.dist, sc.seed, n)
        u = scenario_utility(sc)
        quads = {
            "mean": mean(sc.dist, sc.quad),
            "partial_min": partial_expectation_min(sc.dist, sc.d, sc.quad),
            "partial_call": partial_expectation_call(sc.dist, sc.d, sc.quad),
            "expected_utility": expected_utility(
                u, sc.dist, lambda r: sc.alpha * r, sc.quad),
        }
        samples = {
            "mean": draws,
            "partial_min": np.minimum(draws, sc.d),
            "partial_call": np.maximum(draws - sc.d, 0.0),
            "expected_utility": np.asarray(eval_utility(u, sc.alpha * draws)),
        }
        for name, qv in quads.items():
            out.append(ExpectationCheck(sc.id, name, qv, _mc_check(qv, samples[name])))
    return out
