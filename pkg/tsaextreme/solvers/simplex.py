#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Bounded-variable revised simplex for tsaextreme

Two-phase primal simplex with explicit variable bounds. Every row i gets a
logical variable s_i with A_i x + s_i = b_i; its bounds encode the sense
(<=: s >= 0, >=: s <= 0, =: s = 0). Rows are scaled by their largest
absolute coefficient. The basis is held as a sparse LU factorization plus a
product-form eta file that is rebuilt periodically.
"""

from typing import Dict, Any, List, Optional, Tuple
import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from tsaextreme.exceptions import IterationLimitReached, NumericalBreakdown
from tsaextreme.models.lp import LinearProgram, LpArrays, LpSolution, LpStatus, Sense
from tsaextreme.models.solver import BaseSolver

logger = logging.getLogger(__name__)

DEFAULT_OPTIONS: Dict[str, Any] = {
    "feasibility_tol": 1e-7,
    "optimality_tol": 1e-9,
    "pivot_tol": 1e-11,
    "harris_tol": 1e-9,
    "refactor_every": 64,
    "bland_after": 50,
    "max_iter": None,
}


class _BasisFactor:
    """LU factorization of the basis with a product-form eta file."""

    def __init__(self, matrix: sp.csc_matrix):
        try:
            self.lu = splu(matrix)
        except RuntimeError as e:
            raise NumericalBreakdown(f"singular basis: {e}") from e
        self.etas: List[Tuple[int, np.ndarray, np.ndarray, float]] = []

    @property
    def n_updates(self) -> int:
        return len(self.etas)

    def ftran(self, v: np.ndarray) -> np.ndarray:
        """Solve B x = v."""
        x = self.lu.solve(v)
        for r, idx, vals, pivot in self.etas:
            xr = x[r] / pivot
            if xr != 0.0:
                x[idx] -= vals * xr
            x[r] = xr
        return x

    def btran(self, w: np.ndarray) -> np.ndarray:
        """Solve B^T y = w."""
        z = np.array(w, dtype=float)
        for r, idx, vals, pivot in reversed(self.etas):
            z[r] = (z[r] - vals @ z[idx]) / pivot
        return self.lu.solve(z, trans="T")

    def update(self, r: int, alpha: np.ndarray) -> None:
        """Record the replacement of basis position r by a column with FTRAN image alpha."""
        idx = np.flatnonzero(alpha)
        idx = idx[idx != r]
        self.etas.append((r, idx, alpha[idx].copy(), float(alpha[r])))


class _Tableau:
    """Column access and bounds of the extended problem [A_scaled | I | artificials]."""

    def __init__(self, arrays: LpArrays):
        m, n = arrays.shape
        scale = np.abs(arrays.A).max(axis=1).toarray().ravel() if m else np.zeros(0)
        scale[scale == 0.0] = 1.0
        self.m, self.n = m, n
        self.row_scale = scale
        self.A = sp.diags(1.0 / scale) @ arrays.A
        self.A = self.A.tocsc()
        self.AT = self.A.T.tocsr()
        self.b = arrays.b / scale
        self.c = arrays.c

        logical_lo = np.empty(m)
        logical_up = np.empty(m)
        for i, s in enumerate(arrays.senses):
            if s == Sense.LE:
                logical_lo[i], logical_up[i] = 0.0, np.inf
            elif s == Sense.GE:
                logical_lo[i], logical_up[i] = -np.inf, 0.0
            else:
                logical_lo[i], logical_up[i] = 0.0, 0.0
        self.lo = np.concatenate([arrays.lb, logical_lo])
        self.up = np.concatenate([arrays.ub, logical_up])
        self.art_row = np.zeros(0, dtype=int)
        self.art_sign = np.zeros(0)

    @property
    def n_total(self) -> int:
        return self.n + self.m + self.art_row.size

    def add_artificials(self, rows: np.ndarray, signs: np.ndarray) -> None:
        self.art_row = rows.astype(int)
        self.art_sign = signs.astype(float)
        self.lo = np.concatenate([self.lo, np.zeros(rows.size)])
        self.up = np.concatenate([self.up, np.full(rows.size, np.inf)])

    def column(self, j: int) -> Tuple[np.ndarray, np.ndarray]:
        if j < self.n:
            start, stop = self.A.indptr[j], self.A.indptr[j + 1]
            return self.A.indices[start:stop], self.A.data[start:stop]
        if j < self.n + self.m:
            return np.array([j - self.n]), np.array([1.0])
        k = j - self.n - self.m
        return np.array([self.art_row[k]]), np.array([self.art_sign[k]])

    def dense_column(self, j: int) -> np.ndarray:
        v = np.zeros(self.m)
        idx, vals = self.column(j)
        v[idx] = vals
        return v

    def basis_matrix(self, basic: np.ndarray) -> sp.csc_matrix:
        indptr = [0]
        indices: List[np.ndarray] = []
        data: List[np.ndarray] = []
        for j in basic:
            idx, vals = self.column(int(j))
            indices.append(idx)
            data.append(vals)
            indptr.append(indptr[-1] + idx.size)
        return sp.csc_matrix((np.concatenate(data), np.concatenate(indices), np.array(indptr)),
                             shape=(self.m, self.m))

    def product(self, x: np.ndarray) -> np.ndarray:
        """M x for the extended matrix M."""
        out = self.A @ x[:self.n] + x[self.n:self.n + self.m]
        if self.art_row.size:
            np.add.at(out, self.art_row, self.art_sign * x[self.n + self.m:])
        return out

    def transpose_product(self, y: np.ndarray) -> np.ndarray:
        """M^T y for the extended matrix M."""
        parts = [self.AT @ y, y]
        if self.art_row.size:
            parts.append(self.art_sign * y[self.art_row])
        return np.concatenate(parts)


class BoundedSimplexSolver(BaseSolver):
    """Bundled two-phase bounded-variable revised simplex."""

    name = "simplex"

    def __init__(self, options: Optional[Dict[str, Any]] = None):
        merged = dict(DEFAULT_OPTIONS)
        merged.update(options or {})
        super().__init__(merged)

    def _solve(self, lp: LinearProgram) -> LpSolution:
        arrays = lp.to_arrays()
        m, n = arrays.shape
        if m == 0:
            return self._solve_box(arrays)
        return _SimplexRun(_Tableau(arrays), arrays, self.options).run()

    def _solve_box(self, arrays: LpArrays) -> LpSolution:
        """Problems without rows decompose per variable."""
        x = np.zeros(arrays.c.size)
        for j, (cj, lo, up) in enumerate(zip(arrays.c, arrays.lb, arrays.ub)):
            if cj > 0:
                target = lo
            elif cj < 0:
                target = up
            else:
                target = lo if np.isfinite(lo) else (up if np.isfinite(up) else 0.0)
            if not np.isfinite(target):
                return LpSolution(LpStatus.UNBOUNDED)
            x[j] = target
        return LpSolution(LpStatus.OPTIMAL, float(arrays.c @ x) + arrays.offset, x, np.zeros(0))


class _SimplexRun:
    """State of one solve."""

    def __init__(self, tab: _Tableau, arrays: LpArrays, options: Dict[str, Any]):
        self.tab = tab
        self.arrays = arrays
        self.feas_tol = float(options["feasibility_tol"])
        self.opt_tol = float(options["optimality_tol"])
        self.piv_tol = float(options["pivot_tol"])
        self.harris_tol = float(options["harris_tol"])
        self.refactor_every = int(options["refactor_every"])
        self.bland_after = int(options["bland_after"])
        limit = options.get("max_iter")
        self.max_iter = int(limit) if limit else max(50000, 20 * (tab.m + tab.n))
        self.iterations = 0

    # setup

    def _initial_point(self) -> None:
        tab = self.tab
        m, n = tab.m, tab.n
        lo, up = tab.lo, tab.up
        x = np.zeros(n + m)
        at_upper = np.zeros(n + m, dtype=bool)
        struct_lo, struct_up = lo[:n], up[:n]
        x[:n] = np.where(np.isfinite(struct_lo), struct_lo, np.where(np.isfinite(struct_up), struct_up, 0.0))
        at_upper[:n] = ~np.isfinite(struct_lo) & np.isfinite(struct_up)

        residual = tab.b - tab.A @ x[:n]
        log_lo, log_up = lo[n:], up[n:]
        inside = (residual >= log_lo) & (residual <= log_up)
        clipped = np.clip(residual, log_lo, log_up)
        x[n:] = clipped
        need = np.flatnonzero(~inside)

        tab.add_artificials(need, np.sign(residual[need] - clipped[need]))
        art = np.abs(residual[need] - clipped[need])
        self.x = np.concatenate([x, art])
        self.at_upper = np.concatenate([at_upper, np.zeros(need.size, dtype=bool)])
        # logicals of rows needing an artificial sit at the bound nearest the residual
        self.at_upper[n + need] = clipped[need] == log_up[need]

        basic = np.arange(n, n + m)
        basic[need] = n + m + np.arange(need.size)
        self.basic = basic
        self.pos = np.full(tab.n_total, -1)
        self.pos[basic] = np.arange(m)
        self.free = ~np.isfinite(tab.lo) & ~np.isfinite(tab.up)
        self._refactor()

    def _refactor(self) -> None:
        self.factor = _BasisFactor(self.tab.basis_matrix(self.basic))
        nonbasic_x = self.x.copy()
        nonbasic_x[self.basic] = 0.0
        self.x[self.basic] = self.factor.ftran(self.tab.b - self.tab.product(nonbasic_x))

    # iterations

    def _pricing(self, cost: np.ndarray, bland: bool) -> Tuple[int, int, np.ndarray]:
        y = self.factor.btran(cost[self.basic])
        d = cost - self.tab.transpose_product(y)
        tab = self.tab
        nonbasic = self.pos < 0
        movable = nonbasic & (tab.lo < tab.up)
        up_ok = movable & ~self.at_upper & ~self.free & (d < -self.opt_tol)
        down_ok = movable & self.at_upper & (d > self.opt_tol)
        free_ok = movable & self.free & (np.abs(d) > self.opt_tol)
        eligible = up_ok | down_ok | free_ok
        if not eligible.any():
            return -1, 0, y
        if bland:
            q = int(np.flatnonzero(eligible)[0])
        else:
            q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
        direction = 1 if d[q] < 0 else -1
        return q, direction, y

    def _ratio_test(self, alpha: np.ndarray, direction: int, bland: bool) -> Tuple[int, float]:
        """Return (basis position or -1, step length)."""
        tab = self.tab
        delta = -direction * alpha
        xb = self.x[self.basic]
        lb = tab.lo[self.basic]
        ub = tab.up[self.basic]
        dec = (delta < -self.piv_tol) & np.isfinite(lb)
        inc = (delta > self.piv_tol) & np.isfinite(ub)
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.full(delta.size, np.inf)
            raw[dec] = (xb[dec] - lb[dec]) / -delta[dec]
            raw[inc] = (ub[inc] - xb[inc]) / delta[inc]
        limited = dec | inc
        if not limited.any():
            return -1, np.inf

        if bland:
            t_min = raw[limited].min()
            ties = np.flatnonzero(limited & (raw <= t_min + 1e-12))
            r = int(ties[np.argmin(self.basic[ties])])
            return r, max(float(raw[r]), 0.0)

        relaxed = np.full(delta.size, np.inf)
        relaxed[dec] = (xb[dec] - lb[dec] + self.harris_tol) / -delta[dec]
        relaxed[inc] = (ub[inc] - xb[inc] + self.harris_tol) / delta[inc]
        t_max = relaxed.min()
        candidates = np.flatnonzero(limited & (raw <= t_max))
        r = int(candidates[np.argmax(np.abs(alpha[candidates]))])
        return r, max(float(raw[r]), 0.0)

    def _phase(self, cost: np.ndarray, phase: int) -> LpStatus:
        tab = self.tab
        degenerate = 0
        bland = False
        art = slice(tab.n + tab.m, tab.n_total)
        while True:
            if phase == 1 and self.x[art].sum() <= self.feas_tol * 1e-2:
                return LpStatus.OPTIMAL
            if self.iterations >= self.max_iter:
                raise IterationLimitReached(f"simplex stopped after {self.iterations} iterations")

            q, direction, _ = self._pricing(cost, bland)
            if q < 0:
                return LpStatus.OPTIMAL

            alpha = self.factor.ftran(tab.dense_column(q))
            r, t = self._ratio_test(alpha, direction, bland)
            span = tab.up[q] - tab.lo[q]
            self.iterations += 1

            if np.isfinite(span) and span <= t:
                # bound flip, basis unchanged
                self.x[self.basic] -= direction * span * alpha
                self.x[q] = tab.up[q] if direction > 0 else tab.lo[q]
                self.at_upper[q] = direction > 0
                degenerate = 0
                bland = False
                continue
            if r < 0:
                if phase == 1:
                    raise NumericalBreakdown("unbounded ray in the feasibility phase")
                return LpStatus.UNBOUNDED

            leaving = int(self.basic[r])
            leaves_up = -direction * alpha[r] > 0
            self.x[self.basic] -= direction * t * alpha
            self.x[q] += direction * t
            self.x[leaving] = tab.up[leaving] if leaves_up else tab.lo[leaving]
            self.at_upper[leaving] = leaves_up
            self.basic[r] = q
            self.pos[q] = r
            self.pos[leaving] = -1
            self.factor.update(r, alpha)

            if t <= 1e-12:
                degenerate += 1
                if not bland and degenerate >= self.bland_after:
                    logger.debug(f"{degenerate} degenerate pivots, switching to lowest-index rule")
                    bland = True
            else:
                degenerate = 0
                bland = False

            if self.factor.n_updates >= self.refactor_every:
                self._refactor()

    def run(self) -> LpSolution:
        tab = self.tab
        self._initial_point()
        n_art = tab.art_row.size

        if n_art:
            cost1 = np.zeros(tab.n_total)
            cost1[tab.n + tab.m:] = 1.0
            logger.debug(f"phase 1 with {n_art} artificials")
            self._phase(cost1, 1)
            self._refactor()
            infeasibility = float(self.x[tab.n + tab.m:].sum())
            if infeasibility > self.feas_tol * (1.0 + np.abs(tab.b).max(initial=0.0)):
                logger.debug(f"phase 1 ended with infeasibility {infeasibility:.3e}")
                return LpSolution(LpStatus.INFEASIBLE, iterations=self.iterations)
            tab.up[tab.n + tab.m:] = 0.0
            nonbasic_art = np.flatnonzero(self.pos[tab.n + tab.m:] < 0) + tab.n + tab.m
            self.x[nonbasic_art] = 0.0
            self.at_upper[nonbasic_art] = False
            self._refactor()

        cost2 = np.zeros(tab.n_total)
        cost2[:tab.n] = tab.c
        logger.debug(f"phase 2 after {self.iterations} iterations")
        status = self._phase(cost2, 2)
        if status != LpStatus.OPTIMAL:
            return LpSolution(status, iterations=self.iterations)

        self._refactor()
        y_scaled = self.factor.btran(cost2[self.basic])
        primal = np.clip(self.x[:tab.n], self.arrays.lb, self.arrays.ub)
        duals = y_scaled / tab.row_scale
        objective = float(self.arrays.c @ primal) + self.arrays.offset
        return LpSolution(LpStatus.OPTIMAL, objective, primal, duals, iterations=self.iterations)
