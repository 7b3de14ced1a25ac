"""Line-oriented run configuration with dotted keys and grid expansion.

Format: one ``key = value`` per line, ``#`` comments, blank lines ignored.
Values are numbers, bare tokens, bracketed lists (``[0.5, 0.75]``) or
discrete atoms (``0.05:0.5, 0.15:0.5``).  Scenario keys (``alloc.*``,
``dist.*``, ``contract.*``, ``utility.*``) given as lists expand into the
cartesian product; ``run.*`` keys are scalars.  The format is deliberately
flat and diffable, and a dumped config re-parses to an identical value.

Scenario keys::

    dist.kind        degenerate | discrete | uniform | scaled_beta | truncated_normal
    dist.r0 | dist.atoms | dist.lo dist.hi | dist.a dist.b | dist.mu dist.sigma
    dist.nodes       quadrature node count override (default 256)
    alloc.L          total funds (default 100)
    alloc.beta       SR pool share (required)
    contract.d       fixed rate (required)
    contract.alpha   SR investor share (required)
    utility.family   cara | quadratic | power | log_shift (default cara)
    utility.param    family parameter (default 10)
    utility.domain_lo / utility.domain_hi   optional domain override

Run keys (defaults in parentheses)::

    run.seed (42)              run.mc_samples (1000000)   run.jobs (1)
    run.tol_rate (1e-10)       run.tol_payoff (1e-9)      run.max_iter (200)
    run.grid_cap (10000)       run.allow_large_grid (false)
    run.propositions ([p31, p41, p51])
    run.noise_scale (auto)     run.timestamp ("")
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .contracts import FundAllocation
from .errors import ConfigError, ValidationError
from .harness import PROPOSITIONS, Scenario, scenario_seed
from .returns import (Degenerate, DiscreteFinite, QuadratureSpec, ScaledBeta,
                      TruncatedNormal, Uniform)
from .utility import FAMILIES, UtilityFunction

Value = Any  # int | float | bool | str | tuple of these | atoms tuple

SCENARIO_PREFIXES = ("alloc.", "dist.", "contract.", "utility.")

_RUN_DEFAULTS: dict[str, Value] = {
    "run.seed": 42,
    "run.mc_samples": 1_000_000,
    "run.jobs": 1,
    "run.tol_rate": 1e-10,
    "run.tol_payoff": 1e-9,
    "run.max_iter": 200,
    "run.grid_cap": 10_000,
    "run.allow_large_grid": False,
    "run.propositions": ("p31", "p41", "p51"),
    "run.noise_scale": "auto",
    "run.timestamp": "",
}

_SCENARIO_DEFAULTS: dict[str, Value] = {
    "alloc.L": 100.0,
    "utility.family": "cara",
    "utility.param": 10.0,
    "dist.nodes": 256,
}

_KNOWN_KEYS = set(_RUN_DEFAULTS) | set(_SCENARIO_DEFAULTS) | {
    "alloc.beta", "contract.d", "contract.alpha", "dist.kind", "dist.r0",
    "dist.atoms", "dist.lo", "dist.hi", "dist.a", "dist.b", "dist.mu",
    "dist.sigma", "utility.domain_lo", "utility.domain_hi",
}

_PROP_TOKENS = {"p31": "P3_1", "p41": "P4_1", "p51": "P5_1"}

_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


@dataclass(eq=True)
class RunConfig:
    """Parsed configuration: canonical key -> value mapping."""

    values: dict[str, Value]

    def get(self, key: str) -> Value:
        return self.values[key]

    def dump(self) -> str:
        lines = [f"{k} = {_format_value(v)}" for k, v in sorted(self.values.items())]
        return "\n".join(lines) + "\n"


def _format_scalar(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    return str(v)


def _format_value(v: Value) -> str:
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):  # atoms
            return ", ".join(f"{_format_scalar(a)}:{_format_scalar(p)}" for a, p in v)
        return "[" + ", ".join(_format_scalar(x) for x in v) + "]"
    return _format_scalar(v)


def _parse_scalar(token: str, key: str) -> Value:
    token = token.strip()
    if token in ("true", "false"):
        return token == "true"
    if _INT_RE.match(token):
        return int(token)
    if _FLOAT_RE.match(token):
        return float(token)
    if not token:
        return ""
    return token


def _parse_value(raw: str, key: str) -> Value:
    raw = raw.strip()
    if raw.startswith("["):
        if not raw.endswith("]"):
            raise ConfigError(f"{key}: unterminated list {raw!r}")
        inner = raw[1:-1].strip()
        items = [s for s in (p.strip() for p in inner.split(",")) if s]
        return tuple(_parse_scalar(s, key) for s in items)
    if ":" in raw:
        pairs = []
        for part in raw.split(","):
            part = part.strip()
            if not part:
                continue
            try:
                v, p = part.split(":")
                pairs.append((float(v), float(p)))
            except ValueError as err:
                raise ConfigError(f"{key}: malformed atom {part!r}") from err
        return tuple(pairs)
    return _parse_scalar(raw, key)


def parse_config(text: str) -> RunConfig:
    values: dict[str, Value] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(raw, key)
    merged = {**_RUN_DEFAULTS, **_SCENARIO_DEFAULTS, **values}
    _validate_run_keys(merged)
    return RunConfig(values=merged)


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _validate_run_keys(values: dict[str, Value]) -> None:
    for key in ("run.seed", "run.mc_samples", "run.jobs", "run.max_iter",
                "run.grid_cap"):
        if not isinstance(values[key], int) or values[key] < 0:
            raise ConfigError(f"{key}: expected a non-negative integer, got {values[key]!r}")
    props = values["run.propositions"]
    if not isinstance(props, tuple):
        props = (props,)
        values["run.propositions"] = props
    for p in props:
        if p not in _PROP_TOKENS:
            raise ConfigError(f"run.propositions: unknown proposition {p!r} "
                              f"(expected p31, p41, p51)")


def propositions(cfg: RunConfig) -> tuple[str, ...]:
    return tuple(_PROP_TOKENS[p] for p in cfg.get("run.propositions"))


# ---------------------------------------------------------------------------
# Grid expansion and scenario building
# ---------------------------------------------------------------------------

def _axis_values(cfg: RunConfig, key: str) -> tuple[Value, ...]:
    v = cfg.values.get(key)
    if isinstance(v, tuple) and not (v and isinstance(v[0], tuple)):
        return v
    return (v,)


def expand_scenarios(cfg: RunConfig) -> list[Scenario]:
    """Cartesian product over list-valued scenario keys, in key order."""
    axes_keys = [k for k in sorted(cfg.values)
                 if k.startswith(SCENARIO_PREFIXES) and k != "dist.atoms"]
    axes = [(k, _axis_values(cfg, k)) for k in axes_keys]
    size = 1
    for _, vals in axes:
        size *= len(vals)
    cap = cfg.get("run.grid_cap")
    if size > cap and not cfg.get("run.allow_large_grid"):
        raise ConfigError(
            f"grid expands to {size} scenarios, above run.grid_cap = {cap}; "
            f"set run.allow_large_grid = true to override")
    master = cfg.get("run.seed")
    scenarios = []
    for index, combo in enumerate(itertools.product(*(vals for _, vals in axes))):
        mapping = dict(zip((k for k, _ in axes), combo))
        mapping["dist.atoms"] = cfg.values.get("dist.atoms")
        scenarios.append(_build_scenario(mapping, index, master))
    return scenarios


def _require(mapping: dict[str, Value], key: str) -> Value:
    v = mapping.get(key)
    if v is None:
        raise ConfigError(f"{key}: required key missing")
    return v


def _number(mapping: dict[str, Value], key: str, required: bool = True,
            default: float | None = None) -> float:
    v = mapping.get(key, default)
    if v is None:
        if required:
            raise ConfigError(f"{key}: required key missing")
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    return float(v)


def _build_dist(mapping: dict[str, Value]):
    kind = _require(mapping, "dist.kind")
    try:
        if kind == "degenerate":
            return Degenerate(_number(mapping, "dist.r0"))
        if kind == "discrete":
            atoms = _require(mapping, "dist.atoms")
            return DiscreteFinite(atoms)
        lo = _number(mapping, "dist.lo", required=False, default=0.0)
        hi = _number(mapping, "dist.hi", required=False, default=1.0)
        if kind == "uniform":
            return Uniform(lo, hi)
        if kind == "scaled_beta":
            return ScaledBeta(_number(mapping, "dist.a"), _number(mapping, "dist.b"), lo, hi)
        if kind == "truncated_normal":
            return TruncatedNormal(_number(mapping, "dist.mu"),
                                   _number(mapping, "dist.sigma"), lo, hi)
    except ValidationError as err:
        raise ConfigError(f"dist: {err}") from err
    raise ConfigError(f"dist.kind: unknown kind {kind!r}")


def _build_scenario(mapping: dict[str, Value], index: int, master: int) -> Scenario:
    dist = _build_dist(mapping)
    try:
        alloc = FundAllocation(_number(mapping, "alloc.L"), _number(mapping, "alloc.beta"))
        family = mapping.get("utility.family")
        if family not in FAMILIES:
            raise ConfigError(f"utility.family: unknown family {family!r}")
        dom_lo = _number(mapping, "utility.domain_lo", required=False)
        dom_hi = _number(mapping, "utility.domain_hi", required=False)
        utility = UtilityFunction(
            family, _number(mapping, "utility.param"),
            dom_lo if dom_lo is not None else 0.0,
            dom_hi if dom_hi is not None else 1.0)
        nodes = mapping.get("dist.nodes")
        if not isinstance(nodes, int):
            raise ConfigError(f"dist.nodes: expected an integer, got {nodes!r}")
        return Scenario(
            id=f"s{index:04d}",
            alloc=alloc,
            dist=dist,
            d=_number(mapping, "contract.d"),
            alpha=_number(mapping, "contract.alpha"),
            utility=utility,
            quad=QuadratureSpec(nodes),
            seed=scenario_seed(master, index),
        )
    except ValidationError as err:
        raise ConfigError(str(err)) from err
