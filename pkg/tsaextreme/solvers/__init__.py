#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
LP backends for tsaextreme
"""

from typing import Dict, Any, Optional, Type

from tsaextreme.exceptions import UnknownBackend
from tsaextreme.models.lp import LinearProgram, LpSolution
from tsaextreme.models.solver import BaseSolver
from tsaextreme.solvers.highs import HighsSolver
from tsaextreme.solvers.simplex import BoundedSimplexSolver

BACKENDS: Dict[str, Type[BaseSolver]] = {
    BoundedSimplexSolver.name: BoundedSimplexSolver,
    HighsSolver.name: HighsSolver,
}


def get_solver(name: str = "simplex", options: Optional[Dict[str, Any]] = None) -> BaseSolver:
    """Create a backend by name.

    Args:
        name: ``simplex`` (bundled) or ``highs``
        options: Backend options

    Returns:
        Solver instance

    Raises:
        UnknownBackend: If the name is not registered
    """
    try:
        return BACKENDS[name](options)
    except KeyError:
        raise UnknownBackend(f"unknown solver backend '{name}', choose from {sorted(BACKENDS)}") from None


def solve(lp: LinearProgram, solver: Optional[BaseSolver] = None) -> LpSolution:
    """Solve with the given backend, or the bundled simplex."""
    return (solver or BoundedSimplexSolver()).solve(lp)


__all__ = ["BACKENDS", "BaseSolver", "BoundedSimplexSolver", "HighsSolver", "get_solver", "solve"]
