#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
HiGHS backend for tsaextreme, through scipy.optimize.linprog
"""

from typing import Dict, Any, Optional
import logging

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from tsaextreme.exceptions import IterationLimitReached, NumericalBreakdown, SolverError
from tsaextreme.models.lp import LinearProgram, LpSolution, LpStatus, Sense
from tsaextreme.models.solver import BaseSolver

logger = logging.getLogger(__name__)


class HighsSolver(BaseSolver):
    """External solver backend (HiGHS dual simplex by default)."""

    name = "highs"

    def __init__(self, options: Optional[Dict[str, Any]] = None):
        merged = {"method": "highs"}
        merged.update(options or {})
        super().__init__(merged)

    def _solve(self, lp: LinearProgram) -> LpSolution:
        arr = lp.to_arrays()
        m, n = arr.shape
        senses = np.array([s.value for s in arr.senses])
        le = np.flatnonzero(senses == Sense.LE.value)
        ge = np.flatnonzero(senses == Sense.GE.value)
        eq = np.flatnonzero(senses == Sense.EQ.value)
        ineq = np.concatenate([le, ge])
        sign = np.concatenate([np.ones(le.size), -np.ones(ge.size)])

        a_ub = sp.diags(sign) @ arr.A[ineq] if ineq.size else None
        b_ub = sign * arr.b[ineq] if ineq.size else None
        a_eq = arr.A[eq] if eq.size else None
        b_eq = arr.b[eq] if eq.size else None

        result = linprog(arr.c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                         bounds=np.column_stack([arr.lb, arr.ub]), method=self.options["method"])
        iterations = int(getattr(result, "nit", 0) or 0)

        if result.status == 2:
            return LpSolution(LpStatus.INFEASIBLE, iterations=iterations)
        if result.status == 3:
            return LpSolution(LpStatus.UNBOUNDED, iterations=iterations)
        if result.status == 1:
            raise IterationLimitReached(result.message)
        if result.status == 4:
            raise NumericalBreakdown(result.message)
        if result.status != 0:
            raise SolverError(f"HiGHS returned status {result.status}: {result.message}")

        duals = np.zeros(m)
        if ineq.size:
            duals[ineq] = sign * np.asarray(result.ineqlin.marginals)
        if eq.size:
            duals[eq] = np.asarray(result.eqlin.marginals)
        primal = np.asarray(result.x, dtype=float)
        return LpSolution(LpStatus.OPTIMAL, float(arr.c @ primal) + arr.offset, primal, duals,
                          iterations=iterations)
