"""CSV and JSON report writers.

CSV: comma-separated, header row, LF line endings, ``.`` decimal separator,
floats at 17 significant digits so downstream checks reproduce internal
values exactly.  JSON: UTF-8, two-space indent, fixed key order; the run
header's timestamp comes from the configuration (default empty) so two runs
with identical config and seed produce byte-identical reports.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .harness import VerificationRecord

SOLVE_COLUMNS = (
    "id", "dist_kind", "L", "beta", "d", "alpha",
    "alpha_star", "alpha_star_residual", "alpha_star_status",
    "beta_ge_half", "sign_change_found", "closed_form_agrees",
    "d_star", "d_star_residual", "d_star_status", "status",
)

COMPARE_COLUMNS = (
    "id", "dist_kind", "L", "beta", "d", "alpha",
    "e_p1", "e_p2", "v_p1", "v_p2", "e_y1", "e_y2",
    "eu_y1", "eu_y2", "ce_y1", "ce_y2",
)

SUMMARY_COLUMNS = ("proposition", "premise_failures", "conclusion_failures",
                   "passes", "errors")


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.17g}"
    return str(value)


def write_csv(path: str | Path, columns: Sequence[str],
              rows: Iterable[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(c, "")) for c in columns])
    return path


def _json_safe(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def record_payload(rec: VerificationRecord) -> dict:
    return {
        "scenario_id": rec.scenario_id,
        "proposition": rec.proposition,
        "premises": {k: bool(v) for k, v in rec.premises.items()},
        "conclusion_holds": rec.conclusion_holds,
        "witness": {k: _json_safe(v) for k, v in rec.witness.items()},
        "mc": (None if rec.mc is None else
               {"estimate": rec.mc.estimate, "std_error": rec.mc.std_error,
                "agrees": rec.mc.agrees}),
        "status": rec.status,
        "error": rec.error,
    }


def verify_payload(records: Sequence[VerificationRecord], summary: dict,
                   seed: int, timestamp: str) -> dict:
    return {
        "run": {"seed": seed, "timestamp": timestamp, "tool_version": __version__},
        "records": [record_payload(r) for r in records],
        "summary": summary,
    }


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def summary_rows(summary: dict) -> list[dict]:
    rows = []
    for prop, counts in sorted(summary.get("per_proposition", {}).items()):
        rows.append({"proposition": prop, **counts})
    return rows
