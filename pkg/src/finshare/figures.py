"""Figure rendering for the report paths (opt-in via ``--figures``).

Figures land next to the delimited output as PNG files.  Rendering is kept
out of the harness: these functions consume already-computed rows and
summaries.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .contracts import financier_gap
from .harness import Scenario

_MAX_CURVES = 12


def plot_gap_curves(scenarios: Sequence[Scenario], rows: Sequence[dict],
                    path: str | Path) -> Path:
    """Financier gap h(alpha) per scenario with the located root marked."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    alphas = np.linspace(0.0, 1.0, 101)
    for sc, row in list(zip(scenarios, rows))[:_MAX_CURVES]:
        gaps = [financier_gap(sc.alloc, sc.dist, sc.d, a, sc.quad) for a in alphas]
        (line,) = ax.plot(alphas, gaps, lw=1.2, label=sc.id)
        astar = row.get("alpha_star")
        if isinstance(astar, float) and np.isfinite(astar):
            ax.plot([astar], [0.0], "o", ms=4, color=line.get_color())
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("investor share")
    ax.set_ylabel("financier payoff gap (FR - SR)")
    ax.set_title("Financier indifference")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_payoff_bars(rows: Sequence[dict], path: str | Path) -> Path:
    """Grouped expected-payoff bars, FR vs SR, per scenario."""
    path = Path(path)
    rows = list(rows)[:_MAX_CURVES]
    idx = np.arange(len(rows))
    width = 0.2
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for offset, key, label in ((-1.5, "e_p1", "financier SR"),
                               (-0.5, "e_p2", "financier FR"),
                               (0.5, "e_y1", "investor SR"),
                               (1.5, "e_y2", "investor FR")):
        ax.bar(idx + offset * width, [r[key] for r in rows], width, label=label)
    ax.set_xticks(idx)
    ax.set_xticklabels([r["id"] for r in rows], rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("expected payoff")
    ax.set_title("Expected payoffs by contract")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_verify_summary(summary: dict, path: str | Path) -> Path:
    """Stacked outcome counts per claim check."""
    path = Path(path)
    per = summary.get("per_proposition", {})
    props = sorted(per)
    keys = ("passes", "premise_failures", "conclusion_failures", "errors")
    colors = ("#4c9f70", "#e3b505", "#c1292e", "#6b6b6b")
    fig, ax = plt.subplots(figsize=(6, 4))
    bottom = np.zeros(len(props))
    for key, color in zip(keys, colors):
        vals = np.array([per[p].get(key, 0) for p in props], dtype=float)
        ax.bar(props, vals, bottom=bottom, label=key.replace("_", " "), color=color)
        bottom += vals
    ax.set_ylabel("scenarios")
    ax.set_title("Verification outcomes")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
