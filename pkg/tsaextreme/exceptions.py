#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Exception hierarchy for tsaextreme
"""

from typing import Optional


class TsaExtremeError(Exception):
    """Base class for all tsaextreme errors."""


# Time series

class DatasetError(TsaExtremeError):
    """Raised when a dataset cannot be loaded or is invalid."""


class MissingColumn(DatasetError):
    """Raised when a CSV header lacks a required attribute column."""

    def __init__(self, column: str):
        super().__init__(f"missing column '{column}'")
        self.column = column


class NonNumericCell(DatasetError):
    """Raised when a CSV cell cannot be parsed as a real number."""

    def __init__(self, row: int, col: str, value: str = ""):
        super().__init__(f"non-numeric cell at row {row}, column '{col}': {value!r}")
        self.row = row
        self.col = col
        self.value = value


class RaggedLength(DatasetError):
    """Raised when the row count is not a multiple of the period length."""


class NaNValue(DatasetError):
    """Raised when a NaN value is found in the input."""

    def __init__(self, row: int, col: str):
        super().__init__(f"NaN value at row {row}, column '{col}'")
        self.row = row
        self.col = col


class UnknownAttribute(DatasetError):
    """Raised when an attribute name is not part of the dataset or parameters."""

    def __init__(self, name: str):
        super().__init__(f"unknown attribute '{name}'")
        self.name = name


class InvalidDataset(DatasetError):
    """Raised when dataset invariants (lengths, ranges, unique names) fail."""


# Clustering

class ClusteringError(TsaExtremeError):
    """Raised on invalid clustering input."""


class TooFewPeriods(ClusteringError):
    """Raised when fewer periods than clusters are supplied."""


class DimensionMismatch(ClusteringError):
    """Raised when points and centroids have different dimensions."""


# LP backend

class SolverError(TsaExtremeError):
    """Raised when an LP backend fails to produce a result."""


class NumericalBreakdown(SolverError):
    """Raised when the basis becomes singular or pivots fall below threshold."""


class IterationLimitReached(SolverError):
    """Raised when the simplex exceeds its iteration budget."""


class InvalidModel(SolverError):
    """Raised when a linear program is malformed."""


class UnknownBackend(SolverError):
    """Raised when an unknown solver backend is requested."""


# Energy system model

class ModelError(TsaExtremeError):
    """Raised by the residential energy supply system model."""


class SupplyTempExceeded(ModelError):
    """Raised when ambient temperature reaches the heat pump supply temperature."""


class EmptyRepresentativeSet(ModelError):
    """Raised when a design problem is built without any weighted period."""


class NotADesignProblem(ModelError):
    """Raised when design variables are requested from a non-design solution."""


class ZeroTotalCost(ModelError):
    """Raised when cost shares are requested for a zero-cost solution."""

    def __init__(self, total: float = 0.0):
        super().__init__("total cost is zero, cost shares are undefined")
        self.total = total


class ModelInfeasible(ModelError):
    """Raised when a design or operations problem that must be feasible is not."""


# Extreme period selection

class SelectionError(TsaExtremeError):
    """Raised by extreme period identification and selection."""


class MissingAttribute(SelectionError):
    """Raised when a required attribute is absent from the dataset."""

    def __init__(self, name: str):
        super().__init__(f"dataset has no attribute '{name}'")
        self.name = name


class DuplicateAttributeSpec(SelectionError):
    """Raised when virtual day settings name an attribute twice."""


class NoProgress(SelectionError):
    """Raised when an iteration finds no new day to add."""


class MaxExtremesExceeded(SelectionError):
    """Raised when the selection loop hits its extreme-day limit."""


class TooManyExtremes(SelectionError):
    """Raised when too many extreme days are excluded for the append method."""


# Synthetic data and configuration

class InvalidConfig(TsaExtremeError):
    """Raised when a synthetic data configuration is inconsistent."""


class ConfigurationError(TsaExtremeError):
    """Raised when a configuration file or flag is invalid."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class PipelineError(TsaExtremeError):
    """Raised when a pipeline stage fails; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage} failed: {cause}")
        self.stage = stage
        self.cause = cause
