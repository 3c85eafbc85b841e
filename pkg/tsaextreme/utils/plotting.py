#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
SVG charts for tsaextreme
"""

from typing import Sequence, Union
from pathlib import Path
import logging

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from tsaextreme.models.resys import DESIGN_VARIABLES  # noqa: E402

logger = logging.getLogger(__name__)

# fixed ids and no date keep SVG output byte-identical across runs
plt.rcParams["svg.hashsalt"] = "tsaextreme"

LABELS = {
    "p_hp": "HP [kW]",
    "p_eh": "EH [kW]",
    "p_pv": "PV [kW]",
    "p_bat": "Battery [kW]",
    "e_bat": "Battery [kWh]",
}


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote {path}")
    return path


def plot_design_comparison(report, path: Union[str, Path]) -> Path:
    """Bar chart of the representative design next to the reference design."""
    x = np.arange(len(DESIGN_VARIABLES))
    repr_values = [report.dv_repr.to_dict()[n] for n in DESIGN_VARIABLES]
    fig, (ax_dv, ax_obj) = plt.subplots(1, 2, figsize=(10, 4), gridspec_kw={"width_ratios": [3, 1]})

    width = 0.4 if report.dv_ref else 0.6
    ax_dv.bar(x - (width / 2 if report.dv_ref else 0), repr_values, width, label=f"k={report.k}+{report.n_extremes}")
    if report.dv_ref:
        ax_dv.bar(x + width / 2, [report.dv_ref.to_dict()[n] for n in DESIGN_VARIABLES], width, label="reference")
    ax_dv.set_xticks(x)
    ax_dv.set_xticklabels([LABELS[n] for n in DESIGN_VARIABLES])
    ax_dv.set_ylabel("size")
    ax_dv.legend()
    ax_dv.set_title(f"Design variables ({report.method})")

    names, values = ["clustered"], [report.f_clustered]
    if report.f_operations is not None:
        names.append("operations")
        values.append(report.f_operations)
    if report.f_ref is not None:
        names.append("reference")
        values.append(report.f_ref)
    ax_obj.bar(names, values, color="grey")
    ax_obj.set_ylabel("EUR/a")
    ax_obj.set_title("Objective" + ("" if report.feasible_full_year else " (infeasible)"))
    fig.tight_layout()
    return _save(fig, path)


def plot_sweep(points: Sequence, path: Union[str, Path]) -> Path:
    """Total cost and cost shares over the grid fraction."""
    rows = sorted((p.row() for p in points if p.report is not None), key=lambda r: r["fraction"])
    fractions = [100.0 * r["fraction"] for r in rows]
    fig, ax_cost = plt.subplots(figsize=(7, 4))
    ax_cost.plot(fractions, [r["total_cost"] for r in rows], marker="o", color="black", label="total cost")
    ax_cost.set_xlabel("grid connection [% of reference]")
    ax_cost.set_ylabel("total cost [EUR/a]")
    ax_share = ax_cost.twinx()
    ax_share.plot(fractions, [r["capex_share"] for r in rows], marker="s", linestyle="--", label="capex share")
    ax_share.plot(fractions, [r["opex_share"] for r in rows], marker="^", linestyle=":", label="opex share")
    ax_share.set_ylim(-0.05, 1.05)
    ax_share.set_ylabel("share")
    handles = ax_cost.get_legend_handles_labels()[0] + ax_share.get_legend_handles_labels()[0]
    ax_cost.legend(handles, [h.get_label() for h in handles], loc="upper right")
    fig.tight_layout()
    return _save(fig, path)
