#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Time Series Model for tsaextreme

Multi-attribute hourly time series organized as daily periods, with CSV
ingestion, z-normalization and statistical extrema.
"""

from typing import Dict, List, Optional, Sequence, Tuple, Union
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
import logging
import math

import numpy as np
import pandas as pd

from tsaextreme.exceptions import (
    InvalidDataset,
    MissingColumn,
    NaNValue,
    NonNumericCell,
    RaggedLength,
    UnknownAttribute,
)

logger = logging.getLogger(__name__)

DEFAULT_SCHEMA: Tuple[str, ...] = ("el_demand", "heat_demand", "t_ambient", "solar_cf", "el_price")

DEFAULT_UNITS: Dict[str, str] = {
    "el_demand": "kWh/h",
    "heat_demand": "kWh/h",
    "t_ambient": "degC",
    "solar_cf": "kW/kWp",
    "el_price": "EUR/kWh",
}

NON_NEGATIVE_ATTRIBUTES = ("el_demand", "heat_demand")
UNIT_INTERVAL_ATTRIBUTES = ("solar_cf",)


class Statistic(Enum):
    """Extremum statistic over a period."""
    ABSOLUTE = "absolute"
    INTEGRAL = "integral"


class Direction(Enum):
    """Extremum direction."""
    MAX = "max"
    MIN = "min"


@dataclass(frozen=True)
class AttributeProfile:
    """One named hourly series of a dataset."""
    name: str
    values: np.ndarray
    unit: str = ""


@dataclass(frozen=True)
class Period:
    """One period (day) as an attribute-by-hour matrix.

    Virtual periods carry a negative ``day_index``.
    """
    day_index: int
    attributes: Tuple[str, ...]
    matrix: np.ndarray

    def row(self, name: str) -> np.ndarray:
        """Return the hourly profile of one attribute."""
        try:
            return self.matrix[self.attributes.index(name)]
        except ValueError:
            raise UnknownAttribute(name) from None

    def vector(self) -> np.ndarray:
        """Flatten to an attribute-major vector of length N_d * N_t."""
        return self.matrix.reshape(-1)


@dataclass(frozen=True)
class NormalizationParams:
    """Per-attribute mean and (population) standard deviation."""
    mu: Dict[str, float] = field(default_factory=dict)
    sigma: Dict[str, float] = field(default_factory=dict)

    def covers(self, name: str) -> bool:
        return name in self.mu and name in self.sigma

    def denormalize_matrix(self, matrix: np.ndarray, attributes: Sequence[str]) -> np.ndarray:
        """Map a normalized (N_d, N_t) matrix back to original units.

        Args:
            matrix: Normalized values, one row per attribute
            attributes: Attribute names of the rows

        Returns:
            Matrix in original units
        """
        out = np.empty_like(matrix, dtype=float)
        for i, name in enumerate(attributes):
            if not self.covers(name):
                raise UnknownAttribute(name)
            out[i] = matrix[i] * self.sigma[name] + self.mu[name]
        return out


class Dataset:
    """Immutable multi-attribute hourly dataset organized in daily periods."""

    def __init__(self, attributes: Sequence[AttributeProfile], hours_per_day: int = 24,
                 validate_ranges: bool = True):
        """Initialize a dataset.

        Args:
            attributes: Ordered attribute profiles of equal length
            hours_per_day: Period length N_t
            validate_ranges: Check demand and solar ranges (off for normalized data)
        """
        if hours_per_day < 1:
            raise InvalidDataset("hours_per_day must be >= 1")
        if not attributes:
            raise InvalidDataset("a dataset needs at least one attribute")

        names = [a.name for a in attributes]
        if len(set(names)) != len(names):
            raise InvalidDataset(f"attribute names must be unique: {names}")

        length = len(attributes[0].values)
        if length == 0 or length % hours_per_day != 0:
            raise InvalidDataset(
                f"profile length {length} is not a positive multiple of {hours_per_day}")

        profiles = []
        for attr in attributes:
            values = np.array(attr.values, dtype=float)
            if values.shape != (length,):
                raise InvalidDataset(f"attribute '{attr.name}' has {values.size} values, expected {length}")
            if np.isnan(values).any():
                raise InvalidDataset(f"attribute '{attr.name}' contains NaN")
            if validate_ranges:
                _check_range(attr.name, values)
            values.setflags(write=False)
            profiles.append(AttributeProfile(attr.name, values, attr.unit or DEFAULT_UNITS.get(attr.name, "")))

        self.attributes: Tuple[AttributeProfile, ...] = tuple(profiles)
        self.hours_per_day = int(hours_per_day)
        self.n_days = length // self.hours_per_day
        self._names = tuple(names)
        self._index = {name: i for i, name in enumerate(names)}
        cube = np.stack([p.values.reshape(self.n_days, self.hours_per_day) for p in profiles])
        cube.setflags(write=False)
        self._cube = cube

    @classmethod
    def from_matrices(cls, matrices: Dict[str, np.ndarray], units: Optional[Dict[str, str]] = None,
                      validate_ranges: bool = True) -> "Dataset":
        """Build a dataset from per-attribute (n_days, N_t) arrays.

        Args:
            matrices: Attribute name -> day-by-hour array
            units: Optional unit strings
            validate_ranges: Check demand and solar ranges

        Returns:
            New dataset
        """
        units = units or {}
        shapes = {np.asarray(m).shape for m in matrices.values()}
        if len(shapes) != 1:
            raise InvalidDataset(f"inconsistent matrix shapes: {sorted(shapes)}")
        shape = shapes.pop()
        if len(shape) != 2:
            raise InvalidDataset("matrices must be 2-D (days, hours)")
        profiles = [AttributeProfile(name, np.asarray(m, dtype=float).reshape(-1),
                                     units.get(name, DEFAULT_UNITS.get(name, "")))
                    for name, m in matrices.items()]
        return cls(profiles, hours_per_day=shape[1], validate_ranges=validate_ranges)

    @property
    def names(self) -> Tuple[str, ...]:
        """Attribute names in order."""
        return self._names

    @property
    def n_attributes(self) -> int:
        return len(self._names)

    def has(self, name: str) -> bool:
        return name in self._index

    def profile(self, name: str) -> AttributeProfile:
        """Get an attribute profile by name."""
        if name not in self._index:
            raise UnknownAttribute(name)
        return self.attributes[self._index[name]]

    def matrix(self, name: str) -> np.ndarray:
        """Day-by-hour view of one attribute, shape (n_days, N_t)."""
        if name not in self._index:
            raise UnknownAttribute(name)
        return self._cube[self._index[name]]

    def cube(self) -> np.ndarray:
        """Attribute-by-day-by-hour array, shape (N_d, n_days, N_t)."""
        return self._cube

    def day(self, i: int) -> Period:
        """Return day ``i`` as a Period."""
        if not 0 <= i < self.n_days:
            raise IndexError(f"day {i} out of range [0, {self.n_days})")
        return Period(int(i), self._names, np.array(self._cube[:, i, :]))

    def periods(self) -> List[Period]:
        """All days as Periods in chronological order."""
        return [self.day(i) for i in range(self.n_days)]

    def period_vectors(self) -> np.ndarray:
        """Flattened period vectors, shape (n_days, N_d * N_t), attribute-major."""
        return np.ascontiguousarray(self._cube.transpose(1, 0, 2).reshape(self.n_days, -1))

    def select_days(self, days: Sequence[int]) -> "Dataset":
        """Dataset restricted to the given days, in the given order."""
        idx = np.asarray(days, dtype=int)
        return Dataset.from_matrices({name: self._cube[i][idx] for i, name in enumerate(self._names)},
                                     units={p.name: p.unit for p in self.attributes},
                                     validate_ranges=False)

    def to_frame(self) -> pd.DataFrame:
        """One row per hour, one column per attribute."""
        return pd.DataFrame({p.name: p.values for p in self.attributes})

    def __repr__(self) -> str:
        return f"Dataset(n_days={self.n_days}, hours_per_day={self.hours_per_day}, attributes={list(self._names)})"


def _check_range(name: str, values: np.ndarray) -> None:
    if name in NON_NEGATIVE_ATTRIBUTES and (values < 0).any():
        raise InvalidDataset(f"attribute '{name}' must be non-negative")
    if name in UNIT_INTERVAL_ATTRIBUTES and ((values < 0).any() or (values > 1).any()):
        raise InvalidDataset(f"attribute '{name}' must lie in [0, 1]")


def _parse_cell(cell: str, row: int, name: str) -> float:
    """Parse one CSV cell; ``float`` round-trips ``%.17g`` exactly."""
    text = cell.strip()
    try:
        value = float(text)
    except ValueError:
        raise NonNumericCell(row, name, text) from None
    if math.isnan(value):
        raise NaNValue(row, name)
    return value


def load_csv(path: Union[str, Path], schema: Sequence[str] = DEFAULT_SCHEMA,
             hours_per_day: int = 24) -> Dataset:
    """Load an hourly CSV file (one row per hour, chronological) into a Dataset.

    Args:
        path: CSV file path
        schema: Attribute columns to read, in order
        hours_per_day: Period length N_t

    Returns:
        Dataset with n_days = rows / hours_per_day

    Raises:
        MissingColumn, NonNumericCell, RaggedLength, NaNValue
    """
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    frame.columns = [str(c).strip() for c in frame.columns]

    for name in schema:
        if name not in frame.columns:
            raise MissingColumn(name)

    n_rows = len(frame)
    if n_rows == 0 or n_rows % hours_per_day != 0:
        raise RaggedLength(f"{n_rows} rows is not a positive multiple of {hours_per_day}")

    profiles = []
    for name in schema:
        parsed = np.array([_parse_cell(cell, row, name) for row, cell in enumerate(frame[name], start=2)],
                          dtype=float)
        profiles.append(AttributeProfile(name, parsed, DEFAULT_UNITS.get(name, "")))

    dataset = Dataset(profiles, hours_per_day=hours_per_day)
    logger.info(f"Loaded {dataset.n_days} days x {hours_per_day} h with {len(schema)} attributes from {path}")
    return dataset


def write_csv(data: Dataset, path: Union[str, Path]) -> None:
    """Write a dataset in the CSV layout read by :func:`load_csv`."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    data.to_frame().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def z_normalize(data: Dataset) -> Tuple[Dataset, NormalizationParams]:
    """Normalize every attribute to mean 0 and standard deviation 1.

    Statistics are computed per attribute over the entire series with the
    population divisor N. Constant attributes map to all zeros with sigma 0.

    Args:
        data: Dataset in original units

    Returns:
        Normalized dataset and the parameters used
    """
    mu: Dict[str, float] = {}
    sigma: Dict[str, float] = {}
    profiles = []
    for attr in data.attributes:
        m = float(np.mean(attr.values))
        s = float(np.std(attr.values))
        mu[attr.name] = m
        if s == 0.0:
            logger.warning(f"Attribute '{attr.name}' is constant; normalized values are all zero")
            sigma[attr.name] = 0.0
            normalized = np.zeros_like(attr.values)
        else:
            sigma[attr.name] = s
            normalized = (attr.values - m) / s
        profiles.append(AttributeProfile(attr.name, normalized, "1"))
    return Dataset(profiles, data.hours_per_day, validate_ranges=False), NormalizationParams(mu, sigma)


def denormalize(data: Dataset, params: NormalizationParams) -> Dataset:
    """Invert :func:`z_normalize`: x = z * sigma + mu.

    Raises:
        UnknownAttribute: If params do not cover an attribute
    """
    profiles = []
    for attr in data.attributes:
        if not params.covers(attr.name):
            raise UnknownAttribute(attr.name)
        values = attr.values * params.sigma[attr.name] + params.mu[attr.name]
        profiles.append(AttributeProfile(attr.name, values, DEFAULT_UNITS.get(attr.name, "")))
    return Dataset(profiles, data.hours_per_day, validate_ranges=False)


def daily_statistic(data: Dataset, attribute: str, statistic: Statistic) -> np.ndarray:
    """Per-day statistic of one attribute.

    Integral sums use exactly rounded summation, so the result does not depend
    on the order of hours within a day.
    """
    m = data.matrix(attribute)
    if statistic == Statistic.INTEGRAL:
        return np.array([math.fsum(row) for row in m])
    return m


def attribute_extremum(data: Dataset, attribute: str, statistic: Union[Statistic, str],
                       direction: Union[Direction, str]) -> int:
    """Day index holding the extremum of an attribute.

    Args:
        data: Dataset
        attribute: Attribute name
        statistic: ``absolute`` (single hourly value) or ``integral`` (daily sum)
        direction: ``max`` or ``min``

    Returns:
        Day index; ties go to the lowest index

    Raises:
        UnknownAttribute: If the attribute does not exist
    """
    statistic = Statistic(statistic)
    direction = Direction(direction)
    m = data.matrix(attribute)
    if statistic == Statistic.ABSOLUTE:
        per_day = m.max(axis=1) if direction == Direction.MAX else m.min(axis=1)
    else:
        per_day = daily_statistic(data, attribute, statistic)
    # argmax/argmin return the first occurrence
    return int(np.argmax(per_day) if direction == Direction.MAX else np.argmin(per_day))
