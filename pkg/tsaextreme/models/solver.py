#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Base Solver Model for tsaextreme
"""

from typing import Dict, Any, Optional
from abc import ABC, abstractmethod
import logging
import time

from tsaextreme.models.lp import LinearProgram, LpSolution

logger = logging.getLogger(__name__)


class BaseSolver(ABC):
    """Base class for all LP backends."""

    name = "base"

    def __init__(self, options: Optional[Dict[str, Any]] = None):
        """Initialize a solver backend.

        Args:
            options: Backend-specific options (tolerances, limits)
        """
        self.options: Dict[str, Any] = dict(options or {})
        self.solves_performed: int = 0
        self.total_iterations: int = 0
        self.total_seconds: float = 0.0

    @abstractmethod
    def _solve(self, lp: LinearProgram) -> LpSolution:
        """Solve a linear program.

        Args:
            lp: Problem to solve

        Returns:
            Solution with status; primal and duals when optimal
        """
        pass

    def solve(self, lp: LinearProgram) -> LpSolution:
        """Solve ``lp`` and keep running statistics.

        Args:
            lp: Problem to solve

        Returns:
            LpSolution carrying the objective offset and variable names
        """
        start = time.perf_counter()
        solution = self._solve(lp)
        elapsed = time.perf_counter() - start
        solution.backend = self.name
        solution.variable_names = lp.variable_names
        solution.metadata.update(lp.metadata)
        self.solves_performed += 1
        self.total_iterations += solution.iterations
        self.total_seconds += elapsed
        logger.debug(f"{self.name}: '{lp.name}' {lp.n_constraints}x{lp.n_variables} -> "
                     f"{solution.status.value} obj={solution.objective:.10g} "
                     f"in {solution.iterations} iterations, {elapsed:.3f}s")
        return solution

    def get_statistics(self) -> Dict[str, Any]:
        """Cumulative statistics of this backend instance."""
        return {
            "backend": self.name,
            "solves": self.solves_performed,
            "iterations": self.total_iterations,
            "seconds": round(self.total_seconds, 3),
        }

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(options={self.options})"
