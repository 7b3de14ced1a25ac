"""Expected-utility comparison engine for fixed-rate vs profit-sharing contracts."""

__version__ = "0.1.0"

from .contracts import (ContractTerms, FundAllocation, PayoffSummary,
                        expected_payoffs, financier_gap, payoff_fr, payoff_sr)
from .errors import (BracketError, ConfigError, EvaluationError, FinshareError,
                     InvariantError, NoRootError, UtilityDomainError,
                     ValidationError)
from .harness import (Scenario, VerificationRecord, default_grid,
                      mc_cross_validate, run_grid, scenario_seed, verify_p31,
                      verify_p41, verify_p51)
from .returns import (Degenerate, DiscreteFinite, QuadratureSpec, ScaledBeta,
                      TruncatedNormal, Uniform, expect, mean,
                      partial_expectation_call, partial_expectation_min,
                      quantile_grid, sample, variance)
from .sharing import (Dominance, MpsPair, SharingRule, effective_share,
                      fr_financier, fr_investor, induced_distribution,
                      make_mps, sosd_dominates, sr_financier, sr_investor,
                      taylor_gap)
from .solvers import (ParetoConstruction, SolveReport, SolveTarget,
                      pareto_construct, solve_alpha_star, solve_d_star,
                      solve_indifference_rate)
from .utility import (UtilityFunction, cara, certainty_equivalent, deriv1,
                      deriv2, eval_utility, expected_utility, log_shift,
                      power, quadratic, with_domain)
