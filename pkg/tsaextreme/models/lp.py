#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Linear Program Model for tsaextreme

A generic minimization LP built incrementally (single rows or vectorized
row blocks), the solution container shared by all backends, an independent
optimality check and fixed-format MPS export.
"""

from typing import Dict, Any, List, Optional, Sequence, Tuple, Union
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
import logging

import numpy as np
import scipy.sparse as sp

from tsaextreme.exceptions import InvalidModel

logger = logging.getLogger(__name__)

INF = float("inf")


class Sense(Enum):
    """Constraint sense."""
    LE = "<="
    GE = ">="
    EQ = "="


class LpStatus(Enum):
    """Termination status of a solve."""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpArrays:
    """Dense/sparse array form of a LinearProgram."""
    c: np.ndarray
    A: sp.csr_matrix
    senses: Tuple[Sense, ...]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    offset: float = 0.0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.A.shape


ColumnTerms = Sequence[Tuple[Union[np.ndarray, Sequence[int]], Union[np.ndarray, float]]]


class LinearProgram:
    """Minimization LP: min c.x + offset s.t. rows (<=, =, >=) and lb <= x <= ub."""

    def __init__(self, name: str = "lp"):
        """Initialize an empty linear program.

        Args:
            name: Problem name used in logs and MPS export
        """
        self.name = name
        self.objective_offset = 0.0
        self.metadata: Dict[str, Any] = {}
        self._names: List[str] = []
        self._lb: List[float] = []
        self._ub: List[float] = []
        self._cost: List[float] = []
        self._rows: List[np.ndarray] = []
        self._cols: List[np.ndarray] = []
        self._vals: List[np.ndarray] = []
        self._senses: List[Sense] = []
        self._rhs: List[float] = []
        self._row_names: List[str] = []

    @property
    def n_variables(self) -> int:
        return len(self._names)

    @property
    def n_constraints(self) -> int:
        return len(self._senses)

    @property
    def variable_names(self) -> List[str]:
        return list(self._names)

    @property
    def constraint_names(self) -> List[str]:
        return list(self._row_names)

    def add_variable(self, name: str, lb: float = 0.0, ub: float = INF, cost: float = 0.0) -> int:
        """Declare one variable.

        Args:
            name: Variable name
            lb: Lower bound (may be -inf)
            ub: Upper bound (may be +inf)
            cost: Objective coefficient

        Returns:
            Column index

        Raises:
            InvalidModel: If lb > ub or a bound is NaN
        """
        return int(self.add_variables([name], lb, ub, cost)[0])

    def add_variables(self, names: Sequence[str], lb: Union[float, np.ndarray] = 0.0,
                      ub: Union[float, np.ndarray] = INF, cost: Union[float, np.ndarray] = 0.0) -> np.ndarray:
        """Declare a block of variables with scalar or per-variable data.

        Returns:
            Column indices of the new variables
        """
        n = len(names)
        lb_arr = np.broadcast_to(np.asarray(lb, dtype=float), (n,))
        ub_arr = np.broadcast_to(np.asarray(ub, dtype=float), (n,))
        cost_arr = np.broadcast_to(np.asarray(cost, dtype=float), (n,))
        if np.isnan(lb_arr).any() or np.isnan(ub_arr).any() or np.isnan(cost_arr).any():
            raise InvalidModel("NaN in variable data")
        bad = np.flatnonzero(lb_arr > ub_arr)
        if bad.size:
            i = int(bad[0])
            raise InvalidModel(f"variable '{names[i]}' has lb {lb_arr[i]} > ub {ub_arr[i]}")
        if np.isinf(cost_arr).any():
            raise InvalidModel("objective coefficients must be finite")
        start = len(self._names)
        self._names.extend(names)
        self._lb.extend(lb_arr.tolist())
        self._ub.extend(ub_arr.tolist())
        self._cost.extend(cost_arr.tolist())
        return np.arange(start, start + n)

    def set_bounds(self, index: int, lb: float, ub: float) -> None:
        """Replace the bounds of an existing variable."""
        self._check_columns(np.array([index]))
        if lb > ub:
            raise InvalidModel(f"variable '{self._names[index]}' has lb {lb} > ub {ub}")
        self._lb[index] = float(lb)
        self._ub[index] = float(ub)

    def set_cost(self, index: int, cost: float) -> None:
        self._check_columns(np.array([index]))
        self._cost[index] = float(cost)

    def add_constraint(self, terms: Union[Dict[int, float], Sequence[Tuple[int, float]]],
                       sense: Sense, rhs: float, name: str = "") -> int:
        """Add one row ``sum(coef * x[col]) sense rhs``.

        Args:
            terms: Mapping or pairs of column index to coefficient
            sense: Row sense
            rhs: Right-hand side
            name: Row name

        Returns:
            Row index

        Raises:
            InvalidModel: If a column is not declared
        """
        pairs = list(terms.items()) if isinstance(terms, dict) else list(terms)
        cols = np.array([p[0] for p in pairs], dtype=int)
        vals = np.array([p[1] for p in pairs], dtype=float)
        block = self.add_constraint_block([(cols[i:i + 1], vals[i]) for i in range(cols.size)],
                                          sense, np.array([rhs], dtype=float), name or f"r{self.n_constraints}")
        return int(block[0])

    def add_constraint_block(self, terms: ColumnTerms, sense: Sense, rhs: Union[np.ndarray, float],
                             name: str = "", count: Optional[int] = None) -> np.ndarray:
        """Add m rows at once.

        Each term is ``(cols, coef)`` where ``cols`` has length m and row i
        receives ``coef[i] * x[cols[i]]``; ``coef`` may be a scalar.

        Args:
            terms: Column/coefficient pairs shared across the block
            sense: Sense of every row
            rhs: Right-hand sides, length m or scalar
            name: Name prefix; rows are named ``name[i]``
            count: Row count when no term fixes it

        Returns:
            Row indices of the new rows
        """
        sense = Sense(sense)
        m = count
        for cols, _ in terms:
            m = len(cols) if m is None else m
            if len(cols) != m:
                raise InvalidModel(f"row block '{name}' mixes {m} and {len(cols)} rows")
        if m is None:
            m = np.size(rhs)
        rhs_arr = np.broadcast_to(np.asarray(rhs, dtype=float), (m,))
        if not np.isfinite(rhs_arr).all():
            raise InvalidModel(f"row block '{name}' has a non-finite right-hand side")

        start = self.n_constraints
        row_idx = np.arange(start, start + m)
        for cols, coef in terms:
            cols = np.asarray(cols, dtype=int)
            self._check_columns(cols)
            vals = np.broadcast_to(np.asarray(coef, dtype=float), (m,))
            if not np.isfinite(vals).all():
                raise InvalidModel(f"row block '{name}' has a non-finite coefficient")
            self._rows.append(row_idx)
            self._cols.append(cols)
            self._vals.append(np.array(vals))
        self._senses.extend([sense] * m)
        self._rhs.extend(rhs_arr.tolist())
        if m == 1:
            self._row_names.append(name or f"r{start}")
        else:
            self._row_names.extend(f"{name}[{i}]" for i in range(m))
        return row_idx

    def _check_columns(self, cols: np.ndarray) -> None:
        if cols.size and (cols.min() < 0 or cols.max() >= self.n_variables):
            raise InvalidModel(f"row references an undeclared variable (columns 0..{self.n_variables - 1})")

    def index_of(self, name: str) -> int:
        """Column index of a named variable."""
        try:
            return self._names.index(name)
        except ValueError:
            raise InvalidModel(f"unknown variable '{name}'") from None

    def to_arrays(self) -> LpArrays:
        """Assemble the array form (duplicate entries are summed)."""
        m, n = self.n_constraints, self.n_variables
        if self._rows:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
        else:
            rows = cols = np.zeros(0, dtype=int)
            vals = np.zeros(0)
        A = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
        A.sum_duplicates()
        A.eliminate_zeros()
        return LpArrays(
            c=np.array(self._cost, dtype=float),
            A=A,
            senses=tuple(self._senses),
            b=np.array(self._rhs, dtype=float),
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            offset=float(self.objective_offset),
        )

    def __repr__(self) -> str:
        return f"LinearProgram(name={self.name!r}, variables={self.n_variables}, constraints={self.n_constraints})"


@dataclass
class LpSolution:
    """Result of a solve.

    ``duals`` follow the sensitivity convention y = d(objective)/d(rhs), so
    binding <= rows carry y <= 0 and binding >= rows carry y >= 0.
    """
    status: LpStatus
    objective: float = float("nan")
    primal: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    backend: str = ""
    variable_names: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL

    def value(self, name: str) -> float:
        """Primal value of a named variable."""
        return float(self.primal[self.variable_names.index(name)])


@dataclass
class OptimalityReport:
    """Maximum KKT violations of a claimed optimal solution."""
    primal_infeasibility: float
    dual_infeasibility: float
    complementarity: float
    duality_gap: float
    primal_objective: float
    dual_objective: float

    def ok(self, tol: float = 1e-6) -> bool:
        """True when every violation is within ``tol``."""
        return max(self.primal_infeasibility, self.dual_infeasibility,
                   self.complementarity, self.duality_gap) <= tol

    def to_dict(self) -> Dict[str, float]:
        return {k: float(v) for k, v in self.__dict__.items()}


def verify_optimality(lp: LinearProgram, solution: LpSolution) -> OptimalityReport:
    """Check primal feasibility, dual feasibility and complementary slackness.

    Args:
        lp: The problem
        solution: A solution claimed optimal

    Returns:
        Report with maximum absolute violations and the relative duality gap
    """
    arr = lp.to_arrays()
    x = np.asarray(solution.primal, dtype=float)
    y = np.asarray(solution.duals, dtype=float)
    if x.shape != (arr.shape[1],) or y.shape != (arr.shape[0],):
        raise InvalidModel("solution does not match the problem dimensions")

    le = np.array([s == Sense.LE for s in arr.senses], dtype=bool)
    ge = np.array([s == Sense.GE for s in arr.senses], dtype=bool)
    eq = ~(le | ge)

    ax = arr.A @ x
    resid = ax - arr.b
    row_viol = np.where(le, np.maximum(resid, 0.0), 0.0)
    row_viol = np.maximum(row_viol, np.where(ge, np.maximum(-resid, 0.0), 0.0))
    row_viol = np.maximum(row_viol, np.where(eq, np.abs(resid), 0.0))
    bound_viol = np.maximum(arr.lb - x, 0.0)
    bound_viol = np.maximum(bound_viol, x - arr.ub)
    primal_inf = float(max(row_viol.max(initial=0.0), np.nan_to_num(bound_viol).max(initial=0.0)))

    d = arr.c - arr.A.T @ y
    dual_row = np.where(le, np.maximum(y, 0.0), 0.0)
    dual_row = np.maximum(dual_row, np.where(ge, np.maximum(-y, 0.0), 0.0))
    lb_inf = np.isneginf(arr.lb)
    ub_inf = np.isposinf(arr.ub)
    dual_col = np.where(lb_inf, np.maximum(d, 0.0), 0.0)
    dual_col = np.maximum(dual_col, np.where(ub_inf, np.maximum(-d, 0.0), 0.0))
    dual_inf = float(max(dual_row.max(initial=0.0), dual_col.max(initial=0.0)))

    comp_row = np.abs(y * np.where(eq, 0.0, resid))
    d_pos = np.where(lb_inf, 0.0, np.maximum(d, 0.0))
    d_neg = np.where(ub_inf, 0.0, np.minimum(d, 0.0))
    gap_lb = np.where(lb_inf, 0.0, x - np.where(lb_inf, 0.0, arr.lb))
    gap_ub = np.where(ub_inf, 0.0, np.where(ub_inf, 0.0, arr.ub) - x)
    comp_col = np.maximum(np.abs(d_pos * gap_lb), np.abs(d_neg * gap_ub))
    complementarity = float(max(comp_row.max(initial=0.0), comp_col.max(initial=0.0)))

    primal_obj = float(arr.c @ x) + arr.offset
    lb_fin = np.where(lb_inf, 0.0, arr.lb)
    ub_fin = np.where(ub_inf, 0.0, arr.ub)
    dual_obj = float(arr.b @ y + lb_fin @ d_pos + ub_fin @ d_neg) + arr.offset
    gap = abs(primal_obj - dual_obj) / (1.0 + abs(primal_obj))

    return OptimalityReport(primal_inf, dual_inf, complementarity, gap, primal_obj, dual_obj)


def _mps_number(value: float) -> str:
    for digits in range(12, 0, -1):
        text = f"{value:.{digits}g}"
        if len(text) <= 12:
            return text
    return f"{value:.1e}"


def write_mps(lp: LinearProgram, path: Union[str, Path]) -> None:
    """Write the problem in fixed-format MPS.

    Variables and rows get generated 8-character names (C0000001, R0000001);
    a comment block maps them back to the model names. The objective offset
    is recorded in the header comment only.

    Args:
        lp: Problem to export
        path: Output file
    """
    arr = lp.to_arrays()
    m, n = arr.shape
    col_names = [f"C{j + 1:07d}" for j in range(n)]
    row_names = [f"R{i + 1:07d}" for i in range(m)]
    kind = {Sense.LE: "L", Sense.GE: "G", Sense.EQ: "E"}

    lines = [f"* {lp.name}: {m} rows, {n} columns, objective offset {_mps_number(arr.offset)}"]
    lines += [f"* {short} {full}" for short, full in zip(col_names, lp.variable_names)]
    lines += [f"* {short} {full}" for short, full in zip(row_names, lp.constraint_names)]
    lines.append(f"NAME          {lp.name[:8].upper()}")
    lines.append("ROWS")
    lines.append(" N  COST")
    lines += [f" {kind[s]}  {r}" for s, r in zip(arr.senses, row_names)]

    lines.append("COLUMNS")
    csc = arr.A.tocsc()
    for j in range(n):
        entries = []
        if arr.c[j] != 0.0:
            entries.append(("COST", arr.c[j]))
        for p in range(csc.indptr[j], csc.indptr[j + 1]):
            entries.append((row_names[csc.indices[p]], csc.data[p]))
        for row, val in entries:
            lines.append(f"    {col_names[j]:<8}  {row:<8}  {_mps_number(val):>12}")

    lines.append("RHS")
    for i in np.flatnonzero(arr.b):
        lines.append(f"    {'RHS':<8}  {row_names[i]:<8}  {_mps_number(arr.b[i]):>12}")

    lines.append("BOUNDS")
    for j in range(n):
        lo, up, name = arr.lb[j], arr.ub[j], col_names[j]
        if lo == up:
            lines.append(f" FX {'BND':<8}  {name:<8}  {_mps_number(lo):>12}")
            continue
        if np.isneginf(lo) and np.isposinf(up):
            lines.append(f" FR {'BND':<8}  {name:<8}")
            continue
        if np.isneginf(lo):
            lines.append(f" MI {'BND':<8}  {name:<8}")
        elif lo != 0.0:
            lines.append(f" LO {'BND':<8}  {name:<8}  {_mps_number(lo):>12}")
        if not np.isposinf(up):
            lines.append(f" UP {'BND':<8}  {name:<8}  {_mps_number(up):>12}")
    lines.append("ENDATA")

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote MPS file for '{lp.name}' ({m} rows, {n} columns) to {path}")
