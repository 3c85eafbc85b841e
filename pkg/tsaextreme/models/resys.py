#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Residential Energy Supply System Model for tsaextreme

Builds the design and operations LPs of a house with PV, battery, heat pump,
electric heater and a limited grid connection over an arbitrary weighted set
of daily periods.
"""

from typing import Dict, Any, List, Optional, Sequence, Union
from dataclasses import dataclass, field
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from tsaextreme.exceptions import (
    EmptyRepresentativeSet,
    InvalidModel,
    ModelInfeasible,
    NotADesignProblem,
    SupplyTempExceeded,
    ZeroTotalCost,
)
from tsaextreme.models.lp import LinearProgram, LpSolution, Sense
from tsaextreme.models.timeseries import Dataset, Period

logger = logging.getLogger(__name__)

DESIGN_VARIABLES = ("p_hp", "p_eh", "p_pv", "p_bat", "e_bat")
OPERATION_VARIABLES = ("e_buy", "pv_gen", "e_in", "e_out", "stor_lev", "e_eh_el", "e_hp_el")
SLACK_VARIABLES = ("e_slack_el", "q_slack_heat")
REQUIRED_ATTRIBUTES = ("el_demand", "heat_demand", "t_ambient", "solar_cf", "el_price")

DEFAULT_CAPEX: Dict[str, float] = {"p_pv": 900.0, "p_hp": 900.0, "p_eh": 50.0, "p_bat": 150.0, "e_bat": 100.0}


def annuity_factor(years: float, rate: float) -> float:
    """Annuity present value factor: 1/n at rate 0, r / (1 - (1+r)^-n) otherwise."""
    if rate == 0.0:
        return 1.0 / years
    return rate / (1.0 - (1.0 + rate) ** (-years))


class TechnologyParams(BaseModel):
    """Cost and efficiency data of the supply technologies."""
    model_config = ConfigDict(extra="forbid")

    capex: Dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_CAPEX))
    amortization_years: float = Field(5.0, gt=0.0)
    interest_rate: float = Field(0.0, ge=0.0)
    eta_eh: float = Field(1.0, gt=0.0, le=1.0)
    eta_ch: float = Field(0.95, gt=0.0, le=1.0)
    eta_dis: float = Field(0.95, gt=0.0, le=1.0)
    cop_supply_temp: float = 45.0
    cop_quality: float = Field(0.4, gt=0.0)
    cop_max: float = Field(6.0, ge=1.0)
    cop_fixed: Optional[float] = Field(None, ge=1.0)
    c_slack: float = Field(10.0, ge=0.0)
    max_capacity: Dict[str, Optional[float]] = Field(default_factory=dict)

    @field_validator("capex")
    @classmethod
    def _check_capex(cls, value: Dict[str, float]) -> Dict[str, float]:
        merged = dict(DEFAULT_CAPEX)
        for key, cost in value.items():
            if key not in DEFAULT_CAPEX:
                raise ValueError(f"unknown design variable '{key}'")
            if cost < 0:
                raise ValueError(f"capex of '{key}' must be non-negative")
            merged[key] = float(cost)
        return merged

    @field_validator("max_capacity")
    @classmethod
    def _check_capacity(cls, value: Dict[str, Optional[float]]) -> Dict[str, Optional[float]]:
        for key, cap in value.items():
            if key not in DEFAULT_CAPEX:
                raise ValueError(f"unknown design variable '{key}'")
            if cap is not None and cap < 0:
                raise ValueError(f"max capacity of '{key}' must be non-negative")
        return value

    @property
    def apvf(self) -> float:
        return annuity_factor(self.amortization_years, self.interest_rate)

    def annualized_capex(self, variable: str) -> float:
        """Annualized cost per unit of a design variable."""
        return self.apvf * self.capex[variable]

    def capacity_bound(self, variable: str) -> float:
        cap = self.max_capacity.get(variable)
        return float("inf") if cap is None else float(cap)


class GridLimit(BaseModel):
    """Maximum hourly grid purchase power in kW."""
    model_config = ConfigDict(frozen=True)

    c_lim: float = Field(float("inf"), ge=0.0)


@dataclass(frozen=True)
class DesignVariables:
    """Sizing decisions."""
    p_hp: float = 0.0
    p_eh: float = 0.0
    p_pv: float = 0.0
    p_bat: float = 0.0
    e_bat: float = 0.0

    def __post_init__(self):
        for name in DESIGN_VARIABLES:
            if getattr(self, name) < 0:
                raise InvalidModel(f"design variable '{name}' must be non-negative")

    def to_dict(self) -> Dict[str, float]:
        return {name: float(getattr(self, name)) for name in DESIGN_VARIABLES}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in DESIGN_VARIABLES])

    def annualized_capex(self, params: TechnologyParams) -> float:
        return float(sum(params.annualized_capex(n) * getattr(self, n) for n in DESIGN_VARIABLES))

    def deviation_percent(self, reference: "DesignVariables") -> Dict[str, Optional[float]]:
        """Relative deviation from a reference design in percent; None where the reference is 0."""
        out: Dict[str, Optional[float]] = {}
        for name in DESIGN_VARIABLES:
            ref = getattr(reference, name)
            out[name] = None if ref == 0 else 100.0 * (getattr(self, name) - ref) / ref
        return out

    def max_abs_difference(self, other: "DesignVariables") -> float:
        return float(np.max(np.abs(self.as_array() - other.as_array())))


class RepresentativeSet:
    """Weighted periods in original units that stand in for a dataset."""

    def __init__(self, periods: Sequence[Period], weights: Sequence[float],
                 labels: Optional[Sequence[str]] = None, n_days: Optional[float] = None,
                 metadata: Optional[Dict[str, Any]] = None):
        """Initialize a representative set.

        Args:
            periods: Periods in original units
            weights: Days represented by each period (0 for feasibility-step extremes)
            labels: Kind per period, e.g. ``cluster``, ``extreme`` or ``virtual``
            n_days: Day count of the source dataset, checked against the weight total
            metadata: Provenance, e.g. the clustering the periods came from

        Raises:
            EmptyRepresentativeSet: If no period carries a positive weight
        """
        self.periods: List[Period] = list(periods)
        self.weights = np.asarray(weights, dtype=float)
        self.labels: List[str] = list(labels) if labels is not None else ["cluster"] * len(self.periods)
        if len(self.periods) != self.weights.size or len(self.labels) != self.weights.size:
            raise InvalidModel("periods, weights and labels must have the same length")
        if (self.weights < 0).any():
            raise InvalidModel("weights must be non-negative")
        if not (self.weights > 0).any():
            raise EmptyRepresentativeSet("at least one period needs a positive weight")
        if n_days is not None and abs(self.weights.sum() - n_days) > 1e-9 * max(1.0, n_days):
            raise InvalidModel(f"weights sum to {self.weights.sum()}, expected {n_days}")
        self.n_days = float(self.weights.sum()) if n_days is None else float(n_days)
        self.metadata: Dict[str, Any] = dict(metadata or {})

    def __len__(self) -> int:
        return len(self.periods)

    @property
    def attributes(self) -> Sequence[str]:
        return self.periods[0].attributes

    def weighted_mean(self, attribute: str) -> float:
        """Weight-averaged hourly mean of one attribute."""
        means = np.array([p.row(attribute).mean() for p in self.periods])
        return float(self.weights @ means / self.weights.sum())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "periods": [
                {"day_index": int(p.day_index), "weight": float(w), "label": label}
                for p, w, label in zip(self.periods, self.weights, self.labels)
            ],
            "total_weight": float(self.weights.sum()),
        }


@dataclass
class OperationProfile:
    """Hourly operation per period, arrays of shape (P, N_t)."""
    e_buy: np.ndarray
    pv_gen: np.ndarray
    e_in: np.ndarray
    e_out: np.ndarray
    stor_lev: np.ndarray
    e_eh_el: np.ndarray
    e_hp_el: np.ndarray
    e_slack_el: np.ndarray
    q_slack_heat: np.ndarray
    period_ids: List[int] = field(default_factory=list)

    def max_slack(self) -> float:
        return float(max(self.e_slack_el.max(initial=0.0), self.q_slack_heat.max(initial=0.0)))

    def slack_by_period(self, carrier: str, measure: str = "peak") -> np.ndarray:
        """Per-period slack of ``heat`` or ``electricity`` as hourly peak or daily sum."""
        values = self.q_slack_heat if carrier == "heat" else self.e_slack_el
        return values.sum(axis=1) if measure == "integral" else values.max(axis=1)


@dataclass
class CostBreakdown:
    """Annual cost split."""
    total: float
    capex: float
    opex: float
    slack_cost: float
    capex_share: float
    opex_share: float

    def to_dict(self) -> Dict[str, float]:
        return {k: float(v) for k, v in self.__dict__.items()}


def cop_profile(t_ambient: np.ndarray, params: TechnologyParams) -> np.ndarray:
    """Hourly heat pump COP from ambient temperature.

    cop = min(cop_max, quality * (T_sup + 273.15) / (T_sup - T_amb)), at least 1.

    Raises:
        SupplyTempExceeded: If an ambient temperature reaches the supply temperature
    """
    t_amb = np.asarray(t_ambient, dtype=float)
    if params.cop_fixed is not None:
        return np.full(t_amb.shape, float(params.cop_fixed))
    t_sup = params.cop_supply_temp
    if (t_amb >= t_sup).any():
        raise SupplyTempExceeded(f"ambient temperature {t_amb.max():.2f} C reaches supply temperature {t_sup} C")
    cop = np.minimum(params.cop_max, params.cop_quality * (t_sup + 273.15) / (t_sup - t_amb))
    if (cop < 1.0).any():
        logger.warning(f"COP below 1 at {int((cop < 1.0).sum())} hours, clamped to 1")
        cop = np.maximum(cop, 1.0)
    return cop


def _stack(periods: Sequence[Period], name: str) -> np.ndarray:
    return np.stack([p.row(name) for p in periods]).astype(float)


def _build(periods: Sequence[Period], weights: np.ndarray, params: TechnologyParams, grid: GridLimit,
           slack: bool, design: Optional[DesignVariables], name: str) -> LinearProgram:
    """Shared builder. With ``design`` given, capacity rows become variable bounds."""
    P = len(periods)
    T = periods[0].matrix.shape[1]
    el = _stack(periods, "el_demand")
    heat = _stack(periods, "heat_demand")
    solar = _stack(periods, "solar_cf")
    price = _stack(periods, "el_price")
    cop = np.stack([cop_profile(p.row("t_ambient"), params) for p in periods])

    lp = LinearProgram(name)
    idx: Dict[str, np.ndarray] = {}

    def block(var: str, lb: Union[float, np.ndarray], ub: Union[float, np.ndarray],
              cost: Union[float, np.ndarray]) -> np.ndarray:
        names = [f"{var}[{j},{t}]" for j in range(P) for t in range(T)]
        cols = lp.add_variables(names, np.ravel(lb), np.ravel(ub), np.ravel(cost)).reshape(P, T)
        idx[var] = cols
        return cols

    dv_idx: Dict[str, int] = {}
    if design is None:
        for var in DESIGN_VARIABLES:
            dv_idx[var] = lp.add_variable(var, 0.0, params.capacity_bound(var), params.annualized_capex(var))

    inf = float("inf")
    w = np.asarray(weights, dtype=float)[:, None] * np.ones((1, T))
    # slack of zero-weight periods is still penalized
    w_slack = np.where(w > 0, w, 1.0)

    fixed = design.to_dict() if design is not None else {}
    ub_of = (lambda var, value: inf) if design is None else (lambda var, value: value)

    e_buy = block("e_buy", 0.0, grid.c_lim, w * price)
    pv_gen = block("pv_gen", 0.0, ub_of("p_pv", solar * fixed.get("p_pv", 0.0)), 0.0)
    e_in = block("e_in", 0.0, ub_of("p_bat", fixed.get("p_bat", 0.0)), 0.0)
    e_out = block("e_out", 0.0, ub_of("p_bat", fixed.get("p_bat", 0.0)), 0.0)
    stor = block("stor_lev", 0.0, ub_of("e_bat", fixed.get("e_bat", 0.0)), 0.0)
    e_eh = block("e_eh_el", 0.0, ub_of("p_eh", fixed.get("p_eh", 0.0) / params.eta_eh), 0.0)
    e_hp = block("e_hp_el", 0.0, ub_of("p_hp", fixed.get("p_hp", 0.0) / cop), 0.0)
    if slack:
        e_slack = block("e_slack_el", 0.0, inf, params.c_slack * w_slack)
        q_slack = block("q_slack_heat", 0.0, inf, params.c_slack * w_slack)

    flat = np.ravel
    balance = [(flat(e_buy), 1.0), (flat(pv_gen), 1.0), (flat(e_out), 1.0),
               (flat(e_in), -1.0), (flat(e_eh), -1.0), (flat(e_hp), -1.0)]
    if slack:
        balance.append((flat(e_slack), 1.0))
    lp.add_constraint_block(balance, Sense.EQ, flat(el), "el_balance")

    heat_rows = [(flat(e_hp), flat(cop)), (flat(e_eh), params.eta_eh)]
    if slack:
        heat_rows.append((flat(q_slack), 1.0))
    lp.add_constraint_block(heat_rows, Sense.GE, flat(heat), "heat_balance")

    nxt = np.roll(stor, -1, axis=1)
    lp.add_constraint_block([(flat(nxt), 1.0), (flat(stor), -1.0), (flat(e_in), -params.eta_ch),
                             (flat(e_out), 1.0 / params.eta_dis)], Sense.EQ, 0.0, "storage")

    if design is None:
        n = P * T

        def rep(var: str) -> np.ndarray:
            return np.full(n, dv_idx[var])

        lp.add_constraint_block([(flat(pv_gen), 1.0), (rep("p_pv"), -flat(solar))], Sense.LE, 0.0, "pv_avail")
        lp.add_constraint_block([(flat(e_hp), flat(cop)), (rep("p_hp"), -1.0)], Sense.LE, 0.0, "hp_cap")
        lp.add_constraint_block([(flat(e_eh), params.eta_eh), (rep("p_eh"), -1.0)], Sense.LE, 0.0, "eh_cap")
        lp.add_constraint_block([(flat(stor), 1.0), (rep("e_bat"), -1.0)], Sense.LE, 0.0, "stor_cap")
        lp.add_constraint_block([(flat(e_in), 1.0), (rep("p_bat"), -1.0)], Sense.LE, 0.0, "charge_cap")
        lp.add_constraint_block([(flat(e_out), 1.0), (rep("p_bat"), -1.0)], Sense.LE, 0.0, "discharge_cap")
    else:
        lp.objective_offset = design.annualized_capex(params)

    lp.metadata.update({
        "kind": "design" if design is None else "operations",
        "index": idx,
        "design_index": dv_idx,
        "slack": slack,
        "weights": np.asarray(weights, dtype=float),
        "buy_cost": w * price,
        "slack_weight": w_slack,
        "period_ids": [int(p.day_index) for p in periods],
        "fixed_design": design,
        "params": params,
    })
    return lp


def build_design_problem(representatives: RepresentativeSet, params: TechnologyParams, grid: GridLimit,
                         slack: bool = False, name: str = "design") -> LinearProgram:
    """Design and operations LP over weighted representative periods.

    Zero-weight periods contribute full constraint rows but no operating cost.

    Args:
        representatives: Weighted periods in original units
        params: Technology data
        grid: Grid purchase limit
        slack: Add electricity and heat slack at the lost-load price

    Returns:
        LinearProgram with metadata kind ``design``

    Raises:
        EmptyRepresentativeSet: If no period has positive weight
    """
    if len(representatives) == 0 or not (representatives.weights > 0).any():
        raise EmptyRepresentativeSet("no weighted period to design for")
    lp = _build(representatives.periods, representatives.weights, params, grid, slack, None, name)
    logger.debug(f"Built design problem '{name}': {len(representatives)} periods, "
                 f"{lp.n_variables} variables, {lp.n_constraints} rows")
    return lp


def build_operations_problem(design: DesignVariables, periods: Union[Dataset, Period, Sequence[Period]],
                             params: TechnologyParams, grid: GridLimit, slack: bool = False,
                             name: str = "operations") -> LinearProgram:
    """Operations LP for a fixed design, every period with weight 1.

    The design's annualized capex enters as the objective offset, so the
    optimal value is the total annual cost of operating that design.

    Args:
        design: Fixed sizing
        periods: Full dataset, a single day, or a list of periods
        params: Technology data
        grid: Grid purchase limit
        slack: Add slack variables

    Returns:
        LinearProgram with metadata kind ``operations``
    """
    if isinstance(periods, Dataset):
        period_list = periods.periods()
    elif isinstance(periods, Period):
        period_list = [periods]
    else:
        period_list = list(periods)
    return _build(period_list, np.ones(len(period_list)), params, grid, slack, design, name)


def extract_design(solution: LpSolution) -> DesignVariables:
    """Sizing values of an optimal design-problem solution.

    Raises:
        NotADesignProblem: If the solution belongs to an operations problem
        ModelInfeasible: If the solution is not optimal
    """
    if solution.metadata.get("kind") != "design":
        raise NotADesignProblem(f"solution kind is {solution.metadata.get('kind')!r}")
    if not solution.is_optimal:
        raise ModelInfeasible(f"design problem is {solution.status.value}")
    dv_idx = solution.metadata["design_index"]
    return DesignVariables(**{name: max(0.0, float(solution.primal[dv_idx[name]])) for name in DESIGN_VARIABLES})


def extract_operations(solution: LpSolution) -> OperationProfile:
    """Hourly operation arrays of an optimal solution."""
    if not solution.is_optimal:
        raise ModelInfeasible(f"problem is {solution.status.value}")
    idx = solution.metadata["index"]
    x = solution.primal

    def values(var: str) -> np.ndarray:
        if var in idx:
            return np.maximum(x[idx[var]], 0.0)
        return np.zeros(idx["e_buy"].shape)

    return OperationProfile(*(values(v) for v in OPERATION_VARIABLES + SLACK_VARIABLES),
                            period_ids=list(solution.metadata["period_ids"]))


def cost_breakdown(solution: LpSolution, params: TechnologyParams) -> CostBreakdown:
    """Split the optimal cost into annualized capex, purchase opex and slack cost.

    Shares are taken over capex + opex; ``total`` is the objective value.

    Raises:
        ZeroTotalCost: If capex + opex is zero
    """
    if not solution.is_optimal:
        raise ModelInfeasible(f"problem is {solution.status.value}")
    meta = solution.metadata
    x = solution.primal
    if meta["kind"] == "design":
        capex = float(sum(params.annualized_capex(n) * x[i] for n, i in meta["design_index"].items()))
    else:
        capex = meta["fixed_design"].annualized_capex(params)
    opex = float(np.sum(meta["buy_cost"] * x[meta["index"]["e_buy"]]))
    slack_cost = 0.0
    if meta["slack"]:
        for var in SLACK_VARIABLES:
            slack_cost += float(np.sum(params.c_slack * meta["slack_weight"] * x[meta["index"][var]]))
    base = capex + opex
    if base <= 0.0:
        logger.warning("Total cost is zero, cost shares undefined")
        raise ZeroTotalCost(solution.objective)
    return CostBreakdown(float(solution.objective), capex, opex, slack_cost, capex / base, opex / base)
