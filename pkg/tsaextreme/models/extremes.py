#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Extreme Period Model for tsaextreme

Identifies extreme days (statistical, feasibility-based, slack-based), runs
the iterative selection loops and applies the two representation
modifications: feasibility steps (zero weight) and append (weight one,
excluded from clustering).
"""

from typing import Dict, Any, List, Optional, Sequence, Tuple, Union
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from tsaextreme.exceptions import (
    DuplicateAttributeSpec,
    MaxExtremesExceeded,
    MissingAttribute,
    ModelInfeasible,
    NoProgress,
    TooManyExtremes,
)
from tsaextreme.models.clustering import ClusterResult, KMeansConfig, kmeans_multistart
from tsaextreme.models.lp import LpSolution, LpStatus
from tsaextreme.models.resys import (
    DesignVariables,
    GridLimit,
    RepresentativeSet,
    TechnologyParams,
    build_design_problem,
    build_operations_problem,
    extract_design,
    extract_operations,
)
from tsaextreme.models.solver import BaseSolver
from tsaextreme.solvers import BoundedSimplexSolver, get_solver
from tsaextreme.models.timeseries import (
    Dataset,
    Direction,
    NormalizationParams,
    Period,
    Statistic,
    attribute_extremum,
    z_normalize,
)
from tsaextreme.utils.reporting import write_json

logger = logging.getLogger(__name__)

VIRTUAL_DAY_INDEX = -1


class ExtremeSource(Enum):
    """How an extreme day was found."""
    STATISTICAL = "statistical"
    FEASIBILITY = "feasibility"
    SLACK_HEAT = "slack_heat"
    SLACK_EL = "slack_el"
    VIRTUAL = "virtual"


class ModificationMode(Enum):
    """How extreme days enter the representative set."""
    FEASIBILITY_STEPS = "feasibility_steps"
    APPEND = "append"


@dataclass(frozen=True)
class ExtremeSpec:
    """Which statistic of which attribute marks a day as extreme."""
    attribute: str
    statistic: Statistic = Statistic.ABSOLUTE
    direction: Direction = Direction.MAX

    def __post_init__(self):
        object.__setattr__(self, "statistic", Statistic(self.statistic))
        object.__setattr__(self, "direction", Direction(self.direction))


# Default extremum per attribute for virtual days; t_ambient follows the heat peak day.
DEFAULT_VIRTUAL_SPECS: Dict[str, ExtremeSpec] = {
    "el_demand": ExtremeSpec("el_demand", Statistic.ABSOLUTE, Direction.MAX),
    "heat_demand": ExtremeSpec("heat_demand", Statistic.ABSOLUTE, Direction.MAX),
    "solar_cf": ExtremeSpec("solar_cf", Statistic.INTEGRAL, Direction.MIN),
    "el_price": ExtremeSpec("el_price", Statistic.INTEGRAL, Direction.MAX),
}


@dataclass
class ExtremeDay:
    """A selected extreme day; virtual days carry a negative index and their own period."""
    day_index: int
    source: ExtremeSource
    iteration: int = 0
    period: Optional[Period] = None

    @property
    def is_virtual(self) -> bool:
        return self.source == ExtremeSource.VIRTUAL

    def to_dict(self) -> Dict[str, Any]:
        return {"day_index": int(self.day_index), "source": self.source.value, "iteration": int(self.iteration)}


@dataclass
class SelectionIteration:
    """Log entry of one selection iteration."""
    iteration: int
    candidate_days: List[int]
    objective: float
    status: str
    max_slack: Optional[float] = None
    infeasible_days: List[int] = field(default_factory=list)
    added_day: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iteration": self.iteration,
            "candidate_days": [int(d) for d in self.candidate_days],
            "objective": float(self.objective),
            "status": self.status,
            "max_slack": None if self.max_slack is None else float(self.max_slack),
            "infeasible_days": [int(d) for d in self.infeasible_days],
            "added_day": self.added_day,
        }


@dataclass
class SelectionResult:
    """Outcome of an iterative extreme period selection."""
    method: str
    mode: ModificationMode
    extreme_days: List[ExtremeDay] = field(default_factory=list)
    iterations: List[SelectionIteration] = field(default_factory=list)
    converged: bool = False
    design: Optional[DesignVariables] = None
    representatives: Optional[RepresentativeSet] = None
    init_solution: Optional[LpSolution] = None

    @property
    def day_indices(self) -> List[int]:
        return [e.day_index for e in self.extreme_days]

    @property
    def objective(self) -> float:
        return self.iterations[-1].objective if self.iterations else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-serializable dictionary."""
        return {
            "method": self.method,
            "mode": self.mode.value,
            "converged": self.converged,
            "extreme_days": [e.to_dict() for e in self.extreme_days],
            "iterations": [it.to_dict() for it in self.iterations],
            "design": self.design.to_dict() if self.design else None,
        }

    def save_to_file(self, path: Union[str, Path]) -> Path:
        """Write the selection log as JSON."""
        return write_json(self.to_dict(), path)


class SelectionLimits(BaseModel):
    """Stopping rules and variants of the selection loops."""
    model_config = ConfigDict(extra="forbid")

    max_extremes: int = Field(30, ge=1)
    slack_tol: float = Field(1e-6, ge=0.0)
    seed_simple: Optional[bool] = None
    slack_measure: str = Field("peak", pattern="^(peak|integral)$")
    slack_order: str = Field("heat_first", pattern="^(heat_first|electricity_first)$")
    workers: int = Field(1, ge=1)


def _require(data: Dataset, names: Sequence[str]) -> None:
    for name in names:
        if not data.has(name):
            raise MissingAttribute(name)


def select_simple(data: Dataset) -> List[ExtremeDay]:
    """Statistical extremes: peak electricity day, peak heat day, least solar day.

    Coincident days are returned once, in that order.

    Raises:
        MissingAttribute: If a required attribute is absent
    """
    _require(data, ("el_demand", "heat_demand", "solar_cf"))
    days = [
        attribute_extremum(data, "el_demand", Statistic.ABSOLUTE, Direction.MAX),
        attribute_extremum(data, "heat_demand", Statistic.ABSOLUTE, Direction.MAX),
        attribute_extremum(data, "solar_cf", Statistic.INTEGRAL, Direction.MIN),
    ]
    unique = list(dict.fromkeys(days))
    return [ExtremeDay(d, ExtremeSource.STATISTICAL, 0) for d in unique]


def make_virtual_day(data: Dataset, specs: Optional[Sequence[ExtremeSpec]] = None,
                     day_index: int = VIRTUAL_DAY_INDEX) -> Period:
    """Splice each attribute's extreme-day profile into one artificial day.

    Attributes without a spec follow the default table; ambient temperature
    is taken from the heat-demand extreme day and any other attribute from
    its absolute-maximum day.

    Args:
        data: Dataset in original units
        specs: Overrides, at most one per attribute
        day_index: Negative identity of the virtual day

    Returns:
        Period with one row per dataset attribute

    Raises:
        DuplicateAttributeSpec: If an attribute is specified twice
        MissingAttribute: If a spec names an unknown attribute
    """
    chosen: Dict[str, ExtremeSpec] = {}
    for spec in specs or []:
        if spec.attribute in chosen:
            raise DuplicateAttributeSpec(f"attribute '{spec.attribute}' specified twice")
        _require(data, [spec.attribute])
        chosen[spec.attribute] = spec

    source_day: Dict[str, int] = {}
    for name in data.names:
        if name == "t_ambient" and name not in chosen:
            continue
        spec = chosen.get(name) or DEFAULT_VIRTUAL_SPECS.get(name) or ExtremeSpec(name)
        source_day[name] = attribute_extremum(data, name, spec.statistic, spec.direction)
    if "t_ambient" in data.names and "t_ambient" not in source_day:
        heat_spec = chosen.get("heat_demand", DEFAULT_VIRTUAL_SPECS["heat_demand"])
        source_day["t_ambient"] = (attribute_extremum(data, "heat_demand", heat_spec.statistic, heat_spec.direction)
                                   if data.has("heat_demand") else
                                   attribute_extremum(data, "t_ambient", Statistic.ABSOLUTE, Direction.MIN))

    matrix = np.stack([data.matrix(name)[source_day[name]] for name in data.names])
    logger.info(f"Virtual day {day_index} spliced from days {source_day}")
    return Period(day_index, data.names, matrix)


def modify_feasibility_steps(clusters: ClusterResult, data: Dataset, extreme_days: Sequence[ExtremeDay],
                             norm: NormalizationParams) -> RepresentativeSet:
    """Denormalized centroids with weights N_j plus extreme days with weight 0.

    Args:
        clusters: Clustering of the normalized full dataset
        data: Dataset in original units
        extreme_days: Selected extremes (actual profiles, or virtual periods)
        norm: Parameters used to normalize the clustered data

    Returns:
        RepresentativeSet whose weights sum to n_days
    """
    periods: List[Period] = []
    for j in range(clusters.k):
        matrix = norm.denormalize_matrix(clusters.centroid_matrix(j, data.n_attributes), data.names)
        periods.append(Period(-(1000 + j), data.names, matrix))
    weights = [float(c) for c in clusters.counts]
    labels = ["cluster"] * clusters.k
    for extreme in extreme_days:
        periods.append(extreme.period if extreme.is_virtual else data.day(extreme.day_index))
        weights.append(0.0)
        labels.append("virtual" if extreme.is_virtual else "extreme")
    return RepresentativeSet(periods, weights, labels, n_days=data.n_days,
                             metadata={"clusters": clusters, "mode": ModificationMode.FEASIBILITY_STEPS.value})


def modify_append(data: Dataset, k: int, config: KMeansConfig,
                  extreme_days: Sequence[ExtremeDay]) -> RepresentativeSet:
    """Cluster the remaining days and append each extreme day with weight 1.

    Normalization uses the full dataset. Virtual days are appended with weight
    0 because they stand for no actual day.

    Args:
        data: Dataset in original units
        k: Cluster count for the remaining days
        config: k-means settings (its k is replaced by ``k``)
        extreme_days: Selected extremes

    Returns:
        RepresentativeSet whose weights sum to n_days

    Raises:
        TooManyExtremes: If the remaining days cannot support k clusters
    """
    real = [e.day_index for e in extreme_days if not e.is_virtual]
    if len(real) >= data.n_days - k:
        raise TooManyExtremes(f"{len(real)} extreme days leave too few of {data.n_days} days for k={k}")

    normalized, norm = z_normalize(data)
    keep = [d for d in range(data.n_days) if d not in set(real)]
    clusters = kmeans_multistart([normalized.day(d) for d in keep], config.model_copy(update={"k": k}))

    periods: List[Period] = []
    for j in range(clusters.k):
        matrix = norm.denormalize_matrix(clusters.centroid_matrix(j, data.n_attributes), data.names)
        periods.append(Period(-(1000 + j), data.names, matrix))
    weights = [float(c) for c in clusters.counts]
    labels = ["cluster"] * clusters.k
    for extreme in extreme_days:
        if extreme.is_virtual:
            periods.append(extreme.period)
            weights.append(0.0)
            labels.append("virtual")
        else:
            periods.append(data.day(extreme.day_index))
            weights.append(1.0)
            labels.append("extreme")
    return RepresentativeSet(periods, weights, labels, n_days=data.n_days,
                             metadata={"clusters": clusters, "mode": ModificationMode.APPEND.value})


def _daily_status(design: DesignVariables, period: Period, params: TechnologyParams, grid: GridLimit,
                  backend: str, options: Dict[str, Any]) -> str:
    lp = build_operations_problem(design, period, params, grid, slack=False, name=f"daily_{period.day_index}")
    return get_solver(backend, options).solve(lp).status.value


class ExtremePeriodSelector:
    """Runs the iterative selection loops on one clustered dataset."""

    def __init__(self, data: Dataset, clusters: ClusterResult, norm: NormalizationParams,
                 params: TechnologyParams, grid: GridLimit,
                 mode: ModificationMode = ModificationMode.FEASIBILITY_STEPS,
                 limits: Optional[SelectionLimits] = None, solver: Optional[BaseSolver] = None,
                 kmeans_config: Optional[KMeansConfig] = None, virtual_days: bool = False):
        """Initialize a selector.

        Args:
            data: Dataset in original units
            clusters: Clustering of the normalized full dataset
            norm: Normalization parameters of that clustering
            params: Technology data
            grid: Grid purchase limit
            mode: Representation modification
            limits: Loop limits and variants
            solver: LP backend (bundled simplex by default)
            kmeans_config: Settings for re-clustering in append mode
            virtual_days: Seed with one virtual day instead of the statistical extremes
        """
        self.data = data
        self.clusters = clusters
        self.norm = norm
        self.params = params
        self.grid = grid
        self.mode = ModificationMode(mode)
        self.limits = limits or SelectionLimits()
        self.solver = solver or BoundedSimplexSolver()
        self.kmeans_config = kmeans_config or clusters.config
        self.virtual_days = virtual_days
        self._append_cache: Dict[Tuple[int, ...], RepresentativeSet] = {}

    def seed(self) -> List[ExtremeDay]:
        """Initial extreme set: one virtual day, or the statistical extremes."""
        if self.virtual_days:
            return [ExtremeDay(VIRTUAL_DAY_INDEX, ExtremeSource.VIRTUAL, 0, make_virtual_day(self.data))]
        return select_simple(self.data)

    def representatives(self, extremes: Sequence[ExtremeDay]) -> RepresentativeSet:
        """Representative set for the current extreme days under the active modification."""
        if self.mode == ModificationMode.FEASIBILITY_STEPS:
            return modify_feasibility_steps(self.clusters, self.data, extremes, self.norm)
        key = tuple(e.day_index for e in extremes)
        if key not in self._append_cache:
            self._append_cache[key] = modify_append(self.data, self.clusters.k, self.kmeans_config, extremes)
        return self._append_cache[key]

    def solve_design(self, representatives: RepresentativeSet, slack: bool = False) -> LpSolution:
        """Solve O_init on a representative set.

        Raises:
            ModelInfeasible: If the design problem has no solution
        """
        solution = self.solver.solve(build_design_problem(representatives, self.params, self.grid, slack, "O_init"))
        if not solution.is_optimal:
            raise ModelInfeasible(f"O_init is {solution.status.value}")
        return solution

    def solve_operations(self, design: DesignVariables, slack: bool) -> LpSolution:
        """Solve O_op on the full dataset."""
        lp = build_operations_problem(design, self.data, self.params, self.grid, slack, "O_op")
        return self.solver.solve(lp)

    def infeasible_days(self, design: DesignVariables) -> List[int]:
        """Days whose O_daily is infeasible for the design, ascending."""
        periods = self.data.periods()
        n = len(periods)
        if self.limits.workers > 1:
            with ProcessPoolExecutor(max_workers=self.limits.workers) as executor:
                statuses = list(executor.map(
                    _daily_status, [design] * n, periods, [self.params] * n, [self.grid] * n,
                    [self.solver.name] * n, [self.solver.options] * n))
        else:
            statuses = [self.solver.solve(build_operations_problem(
                design, p, self.params, self.grid, slack=False, name=f"daily_{p.day_index}")).status.value
                for p in periods]
        return [p.day_index for p, s in zip(periods, statuses) if s != LpStatus.OPTIMAL.value]

    def _check_capacity(self, extremes: Sequence[ExtremeDay]) -> None:
        if len(extremes) >= self.limits.max_extremes:
            raise MaxExtremesExceeded(f"reached {len(extremes)} extreme days without convergence")

    def iterate_feasibility(self) -> SelectionResult:
        """Add infeasible days one at a time until the full operations problem is feasible.

        Returns:
            Converged SelectionResult

        Raises:
            NoProgress: If every infeasible day is already selected
            MaxExtremesExceeded: If the extreme-day limit is reached
        """
        seed = self.limits.seed_simple is not False
        extremes = self.seed() if seed else []
        result = SelectionResult("feasibility", self.mode)

        for iteration in range(1, self.data.n_days + 2):
            reps = self.representatives(extremes)
            init = self.solve_design(reps)
            design = extract_design(init)
            operations = self.solve_operations(design, slack=False)
            entry = SelectionIteration(iteration, [e.day_index for e in extremes], init.objective,
                                       operations.status.value)
            result.iterations.append(entry)
            logger.info(f"Feasibility iteration {iteration}: {len(extremes)} extremes, "
                        f"O_init {init.objective:.6g}, O_op {operations.status.value}")

            if operations.is_optimal:
                result.converged = True
                break
            self._check_capacity(extremes)
            infeasible = self.infeasible_days(design)
            entry.infeasible_days = infeasible
            selected = {e.day_index for e in extremes}
            fresh = [d for d in infeasible if d not in selected]
            if not fresh:
                raise NoProgress(f"all infeasible days {infeasible} are already selected")
            entry.added_day = fresh[0]
            extremes.append(ExtremeDay(fresh[0], ExtremeSource.FEASIBILITY, iteration))

        result.extreme_days = list(extremes)
        result.design = design
        result.representatives = reps
        result.init_solution = init
        return result

    def _next_slack_day(self, measures: Dict[str, np.ndarray], selected: set) -> Optional[Tuple[int, ExtremeSource]]:
        order = ["heat", "electricity"] if self.limits.slack_order == "heat_first" else ["electricity", "heat"]
        sources = {"heat": ExtremeSource.SLACK_HEAT, "electricity": ExtremeSource.SLACK_EL}
        day_ids = np.arange(self.data.n_days)
        for carrier in order:
            values = measures[carrier]
            if values.max(initial=0.0) <= self.limits.slack_tol:
                continue
            for i in np.argsort(-values, kind="stable"):
                if values[i] <= self.limits.slack_tol:
                    break
                if int(day_ids[i]) not in selected:
                    return int(day_ids[i]), sources[carrier]
        return None

    def iterate_slack(self) -> SelectionResult:
        """Add the day of maximum slack until no slack remains in full operations.

        Returns:
            Converged SelectionResult

        Raises:
            NoProgress: If every day carrying slack is already selected
            MaxExtremesExceeded: If the extreme-day limit is reached
        """
        extremes = self.seed() if self.limits.seed_simple else []
        result = SelectionResult("slack", self.mode)

        for iteration in range(1, self.data.n_days + 2):
            reps = self.representatives(extremes)
            init = self.solve_design(reps)
            design = extract_design(init)
            operations = self.solve_operations(design, slack=True)
            if not operations.is_optimal:
                raise ModelInfeasible(f"O_op with slack is {operations.status.value}")
            profile = extract_operations(operations)
            max_slack = profile.max_slack()
            entry = SelectionIteration(iteration, [e.day_index for e in extremes], init.objective,
                                       operations.status.value, max_slack=max_slack)
            result.iterations.append(entry)
            logger.info(f"Slack iteration {iteration}: {len(extremes)} extremes, "
                        f"O_init {init.objective:.6g}, max slack {max_slack:.3e} kWh")

            if max_slack <= self.limits.slack_tol:
                result.converged = True
                break
            self._check_capacity(extremes)
            measure = self.limits.slack_measure
            picked = self._next_slack_day({
                "heat": profile.slack_by_period("heat", measure),
                "electricity": profile.slack_by_period("electricity", measure),
            }, {e.day_index for e in extremes})
            if picked is None:
                raise NoProgress("every day carrying slack is already selected")
            entry.added_day = picked[0]
            extremes.append(ExtremeDay(picked[0], picked[1], iteration))

        result.extreme_days = list(extremes)
        result.design = design
        result.representatives = reps
        result.init_solution = init
        return result


def iterate_feasibility(data: Dataset, clusters: ClusterResult, norm: NormalizationParams,
                        params: TechnologyParams, grid: GridLimit,
                        mode: ModificationMode = ModificationMode.FEASIBILITY_STEPS,
                        limits: Optional[SelectionLimits] = None, solver: Optional[BaseSolver] = None,
                        virtual_days: bool = False) -> SelectionResult:
    """Feasibility-based selection loop, see :meth:`ExtremePeriodSelector.iterate_feasibility`."""
    return ExtremePeriodSelector(data, clusters, norm, params, grid, mode, limits, solver,
                                 virtual_days=virtual_days).iterate_feasibility()


def iterate_slack(data: Dataset, clusters: ClusterResult, norm: NormalizationParams,
                  params: TechnologyParams, grid: GridLimit,
                  mode: ModificationMode = ModificationMode.FEASIBILITY_STEPS,
                  limits: Optional[SelectionLimits] = None, solver: Optional[BaseSolver] = None,
                  virtual_days: bool = False) -> SelectionResult:
    """Slack-based selection loop, see :meth:`ExtremePeriodSelector.iterate_slack`."""
    return ExtremePeriodSelector(data, clusters, norm, params, grid, mode, limits, solver,
                                 virtual_days=virtual_days).iterate_slack()
