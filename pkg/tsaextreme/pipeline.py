#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Pipeline Class for tsaextreme

Orchestrates the reference design (O_ref), the design on representative
periods (O_init), full operations with a fixed design (O_op) and the daily
operations checks (O_daily) used by extreme period selection. Provides grid
limit sweeps and cluster-count and method comparisons.
"""

from typing import Dict, Any, List, Optional, Sequence, Tuple, Union
from dataclasses import dataclass, field
from pathlib import Path
import logging

from tsaextreme.config.config import CliConfig, RunConfig
from tsaextreme.exceptions import ModelInfeasible, PipelineError, TsaExtremeError, ZeroTotalCost
from tsaextreme.models.clustering import ClusterResult, KMeansConfig, kmeans_multistart
from tsaextreme.models.extremes import (
    ExtremeDay,
    ExtremePeriodSelector,
    ModificationMode,
    SelectionResult,
)
from tsaextreme.models.lp import LpSolution
from tsaextreme.models.resys import (
    CostBreakdown,
    DesignVariables,
    GridLimit,
    RepresentativeSet,
    TechnologyParams,
    build_design_problem,
    cost_breakdown,
    extract_design,
    extract_operations,
)
from tsaextreme.models.solver import BaseSolver
from tsaextreme.models.timeseries import Dataset, NormalizationParams, load_csv, z_normalize
from tsaextreme.solvers import BoundedSimplexSolver, get_solver
from tsaextreme.utils.reporting import write_json
from tsaextreme.utils.synthgen import generate

logger = logging.getLogger(__name__)


@dataclass
class ReferenceResult:
    """Solved O_ref at one grid limit."""
    design: DesignVariables
    objective: float
    grid: GridLimit
    solution: LpSolution
    breakdown: Optional[CostBreakdown] = None


@dataclass
class RunReport:
    """Comparison of an aggregated run against the reference case."""
    method: str
    modification: str
    k: int
    grid_fraction: Optional[float]
    grid_limit_kw: float
    dv_repr: DesignVariables
    f_clustered: float
    feasible_full_year: bool
    extreme_days: List[ExtremeDay] = field(default_factory=list)
    f_operations: Optional[float] = None
    dv_ref: Optional[DesignVariables] = None
    f_ref: Optional[float] = None
    capex_share: Optional[float] = None
    opex_share: Optional[float] = None
    ref_capex_share: Optional[float] = None
    ref_opex_share: Optional[float] = None
    max_slack_heat: float = 0.0
    max_slack_el: float = 0.0
    selection: Optional[SelectionResult] = None
    status: str = "ok"

    @property
    def n_extremes(self) -> int:
        return len(self.extreme_days)

    @property
    def accuracy_clustered(self) -> Optional[float]:
        if self.f_ref is None or self.f_ref == 0:
            return None
        return self.f_clustered / self.f_ref

    @property
    def accuracy_operations(self) -> Optional[float]:
        if self.f_ref is None or self.f_operations is None or self.f_operations == 0:
            return None
        return self.f_ref / self.f_operations

    @property
    def deviation_percent(self) -> Optional[Dict[str, Optional[float]]]:
        return None if self.dv_ref is None else self.dv_repr.deviation_percent(self.dv_ref)

    @property
    def total_cost(self) -> float:
        """Reference cost when available, else the representative-period cost."""
        return self.f_ref if self.f_ref is not None else self.f_clustered

    def shares(self) -> Tuple[Optional[float], Optional[float]]:
        """Cost shares matching :attr:`total_cost`."""
        if self.f_ref is not None:
            return self.ref_capex_share, self.ref_opex_share
        return self.capex_share, self.opex_share

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-serializable dictionary."""
        return {
            "method": self.method,
            "modification": self.modification,
            "k": self.k,
            "grid_fraction": self.grid_fraction,
            "grid_limit_kw": self.grid_limit_kw,
            "dv_repr": self.dv_repr.to_dict(),
            "dv_ref": self.dv_ref.to_dict() if self.dv_ref else None,
            "f_clustered": self.f_clustered,
            "f_operations": self.f_operations,
            "f_ref": self.f_ref,
            "feasible_full_year": self.feasible_full_year,
            "extreme_days": [e.to_dict() for e in self.extreme_days],
            "n_extremes": self.n_extremes,
            "capex_share": self.capex_share,
            "opex_share": self.opex_share,
            "ref_capex_share": self.ref_capex_share,
            "ref_opex_share": self.ref_opex_share,
            "max_slack_heat": self.max_slack_heat,
            "max_slack_el": self.max_slack_el,
            "accuracy_clustered": self.accuracy_clustered,
            "accuracy_operations": self.accuracy_operations,
            "deviation_percent": self.deviation_percent,
            "selection": self.selection.to_dict() if self.selection else None,
            "status": self.status,
        }

    def save_to_file(self, path: Union[str, Path]) -> Path:
        """Write the report as strict JSON, NaN as null."""
        return write_json(self.to_dict(), path)


@dataclass
class SweepPoint:
    """One row of a grid-limit sweep."""
    fraction: float
    report: Optional[RunReport] = None
    status: str = "ok"

    def row(self) -> Dict[str, Any]:
        if self.report is None:
            return {"fraction": self.fraction, "total_cost": None, "capex_share": None, "opex_share": None,
                    "X": None, "feasible": None, "status": self.status}
        capex, opex = self.report.shares()
        return {
            "fraction": self.fraction,
            "total_cost": self.report.total_cost,
            "capex_share": capex,
            "opex_share": opex,
            "X": self.report.n_extremes,
            "feasible": self.report.feasible_full_year,
            "status": self.status,
        }


class Pipeline:
    """Runs aggregated design experiments on one dataset."""

    def __init__(self, data: Dataset, config: Optional[RunConfig] = None, solver: Optional[BaseSolver] = None):
        """Initialize the pipeline.

        Args:
            data: Dataset in original units
            config: Base run settings
            solver: LP backend, bundled simplex by default
        """
        self.data = data
        self.config = config or RunConfig()
        self.solver = solver or BoundedSimplexSolver()
        self._normalized: Optional[Tuple[Dataset, NormalizationParams]] = None
        self._clusters: Dict[Tuple[int, int, int], ClusterResult] = {}
        self._references: Dict[Tuple[float, str], ReferenceResult] = {}
        self._reference_limits: Dict[str, float] = {}

    @classmethod
    def from_config(cls, cli: CliConfig) -> "Pipeline":
        """Build a pipeline from the full configuration tree."""
        run = cli.run_config()
        data = load_csv(run.dataset) if run.dataset else generate(cli.synth)
        return cls(data, run, get_solver(cli.solver.backend, cli.solver.options))

    @property
    def params(self) -> TechnologyParams:
        return self.config.technology

    def normalized(self) -> Tuple[Dataset, NormalizationParams]:
        """z-normalized dataset and its parameters (computed once)."""
        if self._normalized is None:
            self._normalized = z_normalize(self.data)
        return self._normalized

    def cluster(self, k: int, config: Optional[RunConfig] = None) -> ClusterResult:
        """Multi-start k-means on the normalized full dataset (cached)."""
        config = config or self.config
        key = (k, config.n_init, config.seed)
        if key not in self._clusters:
            normalized, _ = self.normalized()
            kmeans = KMeansConfig(k=k, n_init=config.n_init, seed=config.seed, workers=config.workers)
            try:
                self._clusters[key] = kmeans_multistart(normalized.periods(), kmeans)
            except TsaExtremeError as e:
                raise PipelineError("clustering", e) from e
        return self._clusters[key]

    def run_reference(self, grid: GridLimit, params: Optional[TechnologyParams] = None) -> ReferenceResult:
        """Solve O_ref on every day with weight 1.

        Args:
            grid: Grid limit
            params: Technology data, the pipeline's by default

        Raises:
            PipelineError: If O_ref is infeasible
        """
        params = params or self.params
        key = (grid.c_lim, params.model_dump_json())
        if key in self._references:
            return self._references[key]
        reps = RepresentativeSet(self.data.periods(), [1.0] * self.data.n_days, ["day"] * self.data.n_days,
                                 n_days=self.data.n_days)
        solution = self.solver.solve(build_design_problem(reps, params, grid, slack=False, name="O_ref"))
        if not solution.is_optimal:
            raise PipelineError("O_ref", ModelInfeasible(f"O_ref is {solution.status.value} at {grid.c_lim} kW"))
        try:
            breakdown = cost_breakdown(solution, params)
        except ZeroTotalCost:
            breakdown = None
        result = ReferenceResult(extract_design(solution), solution.objective, grid, solution, breakdown)
        logger.info(f"O_ref at c_lim={grid.c_lim:.4g} kW: objective {solution.objective:.6g}")
        self._references[key] = result
        return result

    def reference_grid_limit(self, params: Optional[TechnologyParams] = None) -> float:
        """Grid limit defining 100 %: peak hourly purchase of O_ref without a grid limit."""
        params = params or self.params
        key = params.model_dump_json()
        if key not in self._reference_limits:
            reference = self.run_reference(GridLimit(c_lim=float("inf")), params)
            self._reference_limits[key] = float(extract_operations(reference.solution).e_buy.max(initial=0.0))
            logger.info(f"Reference grid limit (100 %): {self._reference_limits[key]:.4f} kW")
        return self._reference_limits[key]

    def grid_limit(self, config: Optional[RunConfig] = None) -> GridLimit:
        """Absolute grid limit of a run configuration."""
        config = config or self.config
        if config.grid_limit_kw is not None:
            return GridLimit(c_lim=config.grid_limit_kw)
        return GridLimit(c_lim=config.grid_fraction * self.reference_grid_limit(config.technology))

    def _selector(self, config: RunConfig, clusters: ClusterResult, grid: GridLimit) -> ExtremePeriodSelector:
        _, norm = self.normalized()
        kmeans = KMeansConfig(k=config.k, n_init=config.n_init, seed=config.seed, workers=config.workers)
        return ExtremePeriodSelector(self.data, clusters, norm, config.technology, grid,
                                     ModificationMode(config.modification), config.selection, self.solver,
                                     kmeans_config=kmeans, virtual_days=config.virtual_days)

    def run_aggregated(self, config: Optional[RunConfig] = None) -> RunReport:
        """Cluster, select extremes per method, solve O_init and evaluate O_op.

        Args:
            config: Run settings; the pipeline's base settings by default

        Returns:
            RunReport

        Raises:
            PipelineError: With the failing stage
        """
        config = config or self.config
        grid = self.grid_limit(config)
        clusters = self.cluster(config.k, config)
        selector = self._selector(config, clusters, grid)

        selection: Optional[SelectionResult] = None
        try:
            if config.method == "feasibility":
                selection = selector.iterate_feasibility()
            elif config.method == "slack":
                selection = selector.iterate_slack()
        except TsaExtremeError as e:
            raise PipelineError("selection", e) from e

        if selection is not None:
            extremes, init = selection.extreme_days, selection.init_solution
        else:
            extremes = selector.seed() if config.method == "simple" else []
            try:
                init = selector.solve_design(selector.representatives(extremes))
            except TsaExtremeError as e:
                raise PipelineError("O_init", e) from e
        design = extract_design(init)

        operations = selector.solve_operations(design, slack=False)
        with_slack = selector.solve_operations(design, slack=True)
        profile = extract_operations(with_slack) if with_slack.is_optimal else None

        report = RunReport(
            method=config.method,
            modification=ModificationMode(config.modification).value,
            k=config.k,
            grid_fraction=None if config.grid_limit_kw is not None else config.grid_fraction,
            grid_limit_kw=grid.c_lim,
            dv_repr=design,
            f_clustered=init.objective,
            feasible_full_year=operations.is_optimal,
            extreme_days=list(extremes),
            f_operations=operations.objective if operations.is_optimal else None,
            max_slack_heat=float(profile.q_slack_heat.max(initial=0.0)) if profile else float("nan"),
            max_slack_el=float(profile.e_slack_el.max(initial=0.0)) if profile else float("nan"),
            selection=selection,
        )
        try:
            shares = cost_breakdown(init, config.technology)
            report.capex_share, report.opex_share = shares.capex_share, shares.opex_share
        except ZeroTotalCost:
            logger.warning("O_init has zero cost, shares left empty")

        if config.reference:
            reference = self.run_reference(grid, config.technology)
            report.dv_ref = reference.design
            report.f_ref = reference.objective
            if reference.breakdown is not None:
                report.ref_capex_share = reference.breakdown.capex_share
                report.ref_opex_share = reference.breakdown.opex_share

        logger.info(f"Run {config.method}/{report.modification} k={config.k} c_lim={grid.c_lim:.4g}: "
                    f"X={report.n_extremes}, f_clustered={report.f_clustered:.6g}, "
                    f"feasible={report.feasible_full_year}")
        return report

    def sweep_grid_limits(self, fractions: Sequence[float], base: Optional[RunConfig] = None) -> List[SweepPoint]:
        """One run per grid fraction; the 100 % limit is computed once.

        Failed points are kept with their error in ``status``.
        """
        base = base or self.config
        limit = self.reference_grid_limit(base.technology)
        points: List[SweepPoint] = []
        for fraction in fractions:
            config = base.model_copy(update={"grid_fraction": float(fraction), "grid_limit_kw": None})
            try:
                points.append(SweepPoint(float(fraction), self.run_aggregated(config)))
            except TsaExtremeError as e:
                logger.error(f"Sweep point {fraction} failed: {e}")
                points.append(SweepPoint(float(fraction), None, f"failed: {e}"))
            logger.info(f"Sweep point {fraction} ({fraction * limit:.4g} kW) done")
        return points

    def compare_cluster_counts(self, ks: Sequence[int], method: str = "feasibility",
                               grid_fraction: Optional[float] = None) -> Dict[str, Any]:
        """Runs with and without extreme days for each cluster count.

        Returns:
            Report with f_ref and, per k, objectives, accuracy, feasibility and design
        """
        update: Dict[str, Any] = {"reference": True}
        if grid_fraction is not None:
            update.update({"grid_fraction": grid_fraction, "grid_limit_kw": None})
        base = self.config.model_copy(update=update)
        entries = []
        f_ref = None
        for k in ks:
            entry: Dict[str, Any] = {"k": int(k)}
            for label, run_method in (("with_extremes", method), ("without_extremes", "none")):
                report = self.run_aggregated(base.model_copy(update={"k": int(k), "method": run_method}))
                f_ref = report.f_ref
                entry[label] = {
                    "f_clustered": report.f_clustered,
                    "f_operations": report.f_operations,
                    "accuracy_clustered": report.accuracy_clustered,
                    "accuracy_operations": report.accuracy_operations,
                    "feasible_full_year": report.feasible_full_year,
                    "n_extremes": report.n_extremes,
                    "extreme_days": [e.day_index for e in report.extreme_days],
                    "design": report.dv_repr.to_dict(),
                }
            entries.append(entry)
        return {"method": method, "grid_fraction": base.grid_fraction, "f_ref": f_ref, "runs": entries}

    def compare_methods(self, grid_fraction: Optional[float] = None) -> Dict[str, Any]:
        """Feasibility vs slack selection crossed with both modifications.

        Returns:
            Report with one entry per combination and the relative gaps between them
        """
        update: Dict[str, Any] = {}
        if grid_fraction is not None:
            update.update({"grid_fraction": grid_fraction, "grid_limit_kw": None})
        base = self.config.model_copy(update=update)
        runs: Dict[str, RunReport] = {}
        for method in ("feasibility", "slack"):
            for modification in ("feasibility_steps", "append"):
                runs[f"{method}/{modification}"] = self.run_aggregated(
                    base.model_copy(update={"method": method, "modification": modification}))

        def gap(a: Optional[float], b: Optional[float]) -> Optional[float]:
            if a is None or b is None or max(abs(a), abs(b)) == 0:
                return None
            return abs(a - b) / max(abs(a), abs(b))

        gaps = {
            f"operations_{mod}": gap(runs[f"feasibility/{mod}"].f_operations, runs[f"slack/{mod}"].f_operations)
            for mod in ("feasibility_steps", "append")
        }
        gaps.update({
            f"init_{method}": gap(runs[f"{method}/feasibility_steps"].f_clustered, runs[f"{method}/append"].f_clustered)
            for method in ("feasibility", "slack")
        })
        return {"runs": {name: report.to_dict() for name, report in runs.items()}, "gaps": gaps}


def run_reference(data: Dataset, params: TechnologyParams, grid: GridLimit,
                  solver: Optional[BaseSolver] = None) -> Tuple[DesignVariables, float]:
    """Design on the full dataset; returns (DV_ref, f_ref)."""
    result = Pipeline(data, RunConfig(technology=params), solver).run_reference(grid)
    return result.design, result.objective


def run_aggregated(config: RunConfig, data: Optional[Dataset] = None,
                   solver: Optional[BaseSolver] = None) -> RunReport:
    """Aggregated run of one configuration; the dataset defaults to ``config.dataset``."""
    if data is None:
        data = load_csv(config.dataset) if config.dataset else generate()
    return Pipeline(data, config, solver).run_aggregated()
