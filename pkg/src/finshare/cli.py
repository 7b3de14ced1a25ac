"""Command-line front end: solve, verify, compare.

Exit codes: 0 success, 1 usage/config error, 2 solver no-root, 3 internal
invariant violation (including conclusion failures in ``verify``).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, expand_scenarios, load_config, propositions
from .contracts import expected_payoffs
from .errors import ConfigError, FinshareError, NoRootError
from .harness import Scenario, run_grid, scenario_utility
from .reports import (COMPARE_COLUMNS, SOLVE_COLUMNS, SUMMARY_COLUMNS,
                      summary_rows, verify_payload, write_csv, write_json)
from .returns import kind_name
from .solvers import solve_alpha_star, solve_d_star
from .utility import certainty_equivalent, expected_utility

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_ROOT = 2
EXIT_INVARIANT = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to the run configuration")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, default=None, help="override run.seed")
    p.add_argument("--mc-samples", type=int, default=None,
                   help="override run.mc_samples")
    p.add_argument("--jobs", type=int, default=None, help="override run.jobs")
    p.add_argument("--dump-config", action="store_true",
                   help="print the effective configuration and exit")
    p.add_argument("--figures", action="store_true",
                   help="also render figures next to the delimited output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finshare",
        description="Compare fixed-rate and profit-sharing financing contracts "
                    "over return distributions.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (("solve", "locate indifference points per scenario"),
                      ("verify", "run the claim checks over a scenario grid"),
                      ("compare", "side-by-side expected payoffs and utilities")):
        _add_common(sub.add_parser(name, help=doc))
    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.values["run.seed"] = args.seed
    if args.mc_samples is not None:
        cfg.values["run.mc_samples"] = args.mc_samples
    if args.jobs is not None:
        cfg.values["run.jobs"] = args.jobs
    return cfg


def _scenario_row(sc: Scenario) -> dict:
    return {"id": sc.id, "dist_kind": kind_name(sc.dist), "L": sc.alloc.L,
            "beta": sc.alloc.beta, "d": sc.d, "alpha": sc.alpha}


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.dump_config:
        sys.stdout.write(cfg.dump())
        return EXIT_OK
    scenarios = expand_scenarios(cfg)
    tol = float(cfg.get("run.tol_rate"))
    rows = []
    any_no_root = False
    for sc in scenarios:
        row = _scenario_row(sc)
        try:
            rep = solve_alpha_star(sc.alloc, sc.dist, sc.d, sc.quad, tol)
            row.update(alpha_star=rep.value, alpha_star_residual=rep.residual,
                       alpha_star_status=rep.status,
                       beta_ge_half=rep.premise_flags["beta_ge_half"],
                       sign_change_found=rep.premise_flags["sign_change_found"],
                       closed_form_agrees=rep.premise_flags["closed_form_agrees"])
            row["status"] = "ok"
        except NoRootError:
            row.update(alpha_star="", alpha_star_residual="",
                       alpha_star_status="no_root",
                       beta_ge_half=sc.alloc.beta >= 0.5,
                       sign_change_found=False, closed_form_agrees="")
            row["status"] = "no_root"
            any_no_root = True
        try:
            rep = solve_d_star(sc.alloc, sc.dist, sc.alpha, sc.quad, tol)
            row.update(d_star=rep.value, d_star_residual=rep.residual,
                       d_star_status=rep.status)
        except NoRootError:
            row.update(d_star="", d_star_residual="", d_star_status="no_root")
            row["status"] = "no_root"
            any_no_root = True
        rows.append(row)
    out = Path(args.out)
    write_csv(out / "solve.csv", SOLVE_COLUMNS, rows)
    if args.figures:
        from .figures import plot_gap_curves
        plot_gap_curves(scenarios, rows, out / "gap_curves.png")
    return EXIT_NO_ROOT if any_no_root else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.dump_config:
        sys.stdout.write(cfg.dump())
        return EXIT_OK
    scenarios = expand_scenarios(cfg)
    noise = cfg.get("run.noise_scale")
    records, summary = run_grid(
        scenarios, propositions(cfg),
        mc_samples=int(cfg.get("run.mc_samples")),
        jobs=int(cfg.get("run.jobs")),
        noise_scale=None if noise == "auto" else float(noise))
    out = Path(args.out)
    payload = verify_payload(records, summary, seed=int(cfg.get("run.seed")),
                             timestamp=str(cfg.get("run.timestamp")))
    write_json(out / "verify.json", payload)
    write_csv(out / "verify_summary.csv", SUMMARY_COLUMNS, summary_rows(summary))
    if args.figures:
        from .figures import plot_verify_summary
        plot_verify_summary(summary, out / "verify_summary.png")
    bad = sum(c["conclusion_failures"] + c["errors"]
              for c in summary["per_proposition"].values())
    return EXIT_INVARIANT if bad else EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = _load(args)
    if args.dump_config:
        sys.stdout.write(cfg.dump())
        return EXIT_OK
    scenarios = expand_scenarios(cfg)
    rows = []
    for sc in scenarios:
        ps = expected_payoffs(sc.alloc, sc.dist, sc.d, sc.alpha, sc.quad)
        u = scenario_utility(sc)
        sr = lambda r: sc.alpha * r
        fr = lambda r: np.maximum(r - sc.d, 0.0)
        row = _scenario_row(sc)
        row.update(e_p1=ps.e_p1, e_p2=ps.e_p2, v_p1=ps.v_p1, v_p2=ps.v_p2,
                   e_y1=ps.e_y1, e_y2=ps.e_y2,
                   eu_y1=expected_utility(u, sc.dist, sr, sc.quad),
                   eu_y2=expected_utility(u, sc.dist, fr, sc.quad,
                                          breakpoints=(sc.d,)),
                   ce_y1=certainty_equivalent(u, sc.dist, sr, sc.quad),
                   ce_y2=certainty_equivalent(u, sc.dist, fr, sc.quad,
                                              breakpoints=(sc.d,)))
        rows.append(row)
    out = Path(args.out)
    write_csv(out / "compare.csv", COMPARE_COLUMNS, rows)
    if args.figures:
        from .figures import plot_payoff_bars
        plot_payoff_bars(rows, out / "payoff_bars.png")
    return EXIT_OK


_COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FinshareError as err:
        print(f"internal error: {err}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
