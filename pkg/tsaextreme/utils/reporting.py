#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Report writers for tsaextreme

JSON and CSV outputs carry no timestamps, so repeated runs with the same
configuration produce identical files.
"""

from typing import Dict, Any, List, Sequence, Union
from pathlib import Path
import json
import logging
import math

import pandas as pd

from tsaextreme.models.resys import DESIGN_VARIABLES

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["fraction", "total_cost", "capex_share", "opex_share", "X", "feasible", "status"]


def clean(value: Any) -> Any:
    """Replace NaN/inf by None recursively for strict JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    return value


def write_json(data: Dict[str, Any], path: Union[str, Path]) -> Path:
    """Write a dictionary as sorted, indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(clean(data), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote {path}")
    return path


def report_row(report) -> Dict[str, Any]:
    """Flat summary of a RunReport for CSV output."""
    row: Dict[str, Any] = {
        "method": report.method,
        "modification": report.modification,
        "k": report.k,
        "grid_fraction": report.grid_fraction,
        "grid_limit_kw": report.grid_limit_kw,
        "X": report.n_extremes,
        "feasible_full_year": report.feasible_full_year,
        "f_clustered": report.f_clustered,
        "f_operations": report.f_operations,
        "f_ref": report.f_ref,
        "capex_share": report.capex_share,
        "opex_share": report.opex_share,
        "max_slack_heat": report.max_slack_heat,
        "max_slack_el": report.max_slack_el,
    }
    for name in DESIGN_VARIABLES:
        row[f"repr_{name}"] = report.dv_repr.to_dict()[name]
        row[f"ref_{name}"] = report.dv_ref.to_dict()[name] if report.dv_ref else None
    return row


def _write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    logger.info(f"Wrote {path}")
    return path


def write_report(report, directory: Union[str, Path]) -> List[Path]:
    """Write ``report.json`` and ``report.csv`` for one run."""
    directory = Path(directory)
    json_path = write_json(report.to_dict(), directory / "report.json")
    csv_path = _write_frame(pd.DataFrame([clean(report_row(report))]), directory / "report.csv")
    return [json_path, csv_path]


def sweep_frame(points: Sequence) -> pd.DataFrame:
    """Sweep points as a table with one row per fraction."""
    return pd.DataFrame([clean(p.row()) for p in points], columns=SWEEP_COLUMNS)


def write_sweep(points: Sequence, path: Union[str, Path]) -> Path:
    """Write the sweep table as CSV."""
    return _write_frame(sweep_frame(points), path)


def is_cost_monotone(points: Sequence, tol: float = 1e-7) -> bool:
    """True if total cost does not increase with the grid fraction."""
    rows = sorted((p.row() for p in points if p.report is not None), key=lambda r: r["fraction"])
    costs = [r["total_cost"] for r in rows]
    return all(b <= a + tol * (1.0 + abs(a)) for a, b in zip(costs, costs[1:]))
