#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Synthetic Dataset Generator for tsaextreme

Deterministic seasonal and diurnal profiles with bounded noise, planted
extreme days and a price series matched to a given band.
"""

from typing import List, Optional, Tuple
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.optimize import brentq

from tsaextreme.exceptions import InvalidConfig
from tsaextreme.models.timeseries import DEFAULT_SCHEMA, Dataset

logger = logging.getLogger(__name__)


class PlantedExtreme(BaseModel):
    """Scale one attribute of one day by a factor, optionally only in some hours."""
    model_config = ConfigDict(extra="forbid")

    day: int
    attribute: str
    scale: float
    hours: Optional[List[int]] = None


class SynthConfig(BaseModel):
    """Settings of the synthetic year."""
    model_config = ConfigDict(extra="forbid")

    n_days: int = 90
    hours_per_day: int = 24
    seed: int = 0
    noise: float = 0.05
    el_base: float = 0.4
    el_seasonal: float = 0.15
    heat_base: float = 1.5
    heat_seasonal: float = 0.4
    t_mean: float = 8.0
    t_seasonal: float = 10.0
    t_diurnal: float = 4.0
    solar_peak: float = 0.8
    solar_seasonal: float = 0.3
    price_min: float = 0.190
    price_max: float = 0.370
    price_mean: float = 0.301
    # None plants the default killer day; [] plants nothing
    planted_extremes: Optional[List[PlantedExtreme]] = None
    killer_day: Optional[int] = None

    def killer_day_index(self) -> int:
        return self.killer_day if self.killer_day is not None else self.n_days // 12

    def killer_hours(self) -> List[int]:
        """Hour indices of the morning heat spike (06:00 to 08:00)."""
        return sorted({6 * self.hours_per_day // 24, 7 * self.hours_per_day // 24})

    def plants(self) -> List[PlantedExtreme]:
        """Planted extremes, by default one winter killer day.

        The killer day has a short morning heat spike (x1.4) and a dull sky
        (solar x0.6). On the default year the spike is the hourly heat maximum.
        """
        if self.planted_extremes is not None:
            return list(self.planted_extremes)
        day = self.killer_day_index()
        return [PlantedExtreme(day=day, attribute="heat_demand", scale=1.4, hours=self.killer_hours()),
                PlantedExtreme(day=day, attribute="solar_cf", scale=0.6)]

    def check(self) -> None:
        """Raise InvalidConfig on inconsistent settings."""
        if self.n_days < 1 or self.hours_per_day < 1:
            raise InvalidConfig("n_days and hours_per_day must be >= 1")
        if not 0.0 <= self.noise < 1.0:
            raise InvalidConfig("noise must lie in [0, 1)")
        if not (self.price_min <= self.price_mean <= self.price_max):
            raise InvalidConfig("price band needs min <= mean <= max")
        if self.price_min < self.price_max and not (self.price_min < self.price_mean < self.price_max):
            raise InvalidConfig("price mean must lie strictly inside a non-degenerate band")
        if abs(self.heat_seasonal) >= 1.0 or abs(self.el_seasonal) >= 1.0 or abs(self.solar_seasonal) >= 1.0:
            raise InvalidConfig("seasonal amplitudes must be below 1")
        for plant in self.plants():
            if not 0 <= plant.day < self.n_days:
                raise InvalidConfig(f"planted day {plant.day} outside [0, {self.n_days})")
            if plant.attribute not in DEFAULT_SCHEMA:
                raise InvalidConfig(f"unknown planted attribute '{plant.attribute}'")
            if plant.scale <= 0:
                raise InvalidConfig("planted scale must be positive")
            if plant.hours is not None and not all(0 <= h < self.hours_per_day for h in plant.hours):
                raise InvalidConfig(f"planted hours must lie in [0, {self.hours_per_day})")


def _bump(hours: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-((hours - center) / width) ** 2)


def _match_price_band(raw: np.ndarray, low: float, high: float, mean: float) -> np.ndarray:
    """Map raw values onto [low, high] with the given mean.

    The affine image z in [0, 1] is bent by z**gamma; gamma is found by root
    finding so that the mean matches.
    """
    if high == low:
        return np.full(raw.shape, low)
    span = raw.max() - raw.min()
    if span == 0:
        raise InvalidConfig("price pattern is constant, cannot match a price band")
    z = (raw - raw.min()) / span
    target = (mean - low) / (high - low)

    def gap(log_gamma: float) -> float:
        return float(np.mean(z ** math.exp(log_gamma))) - target

    lo, hi = math.log(1e-4), math.log(1e4)
    if gap(lo) < 0 or gap(hi) > 0:
        raise InvalidConfig(f"price mean {mean} not reachable for this pattern")
    gamma = math.exp(brentq(gap, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500))
    return low + (high - low) * z ** gamma


def generate(config: Optional[SynthConfig] = None) -> Dataset:
    """Generate a synthetic dataset.

    Args:
        config: Generator settings; defaults give the 90-day desk year

    Returns:
        Dataset with attributes el_demand, heat_demand, t_ambient, solar_cf, el_price

    Raises:
        InvalidConfig: If the settings are inconsistent
    """
    config = config or SynthConfig()
    config.check()
    n, T = config.n_days, config.hours_per_day
    rng = np.random.default_rng(config.seed)

    hours = (np.arange(T) + 0.5) * 24.0 / T
    season = np.cos(2.0 * np.pi * np.arange(n) / n)[:, None]

    def noise(shape: Tuple[int, ...]) -> np.ndarray:
        return 1.0 + config.noise * rng.uniform(-1.0, 1.0, size=shape)

    el_shape = 0.6 + 0.5 * _bump(hours, 8.0, 2.0) + 1.0 * _bump(hours, 19.0, 2.5)
    el = config.el_base * (1.0 + config.el_seasonal * season) * el_shape[None, :] * noise((n, T))

    heat_shape = 1.0 + 0.3 * _bump(hours, 7.0, 2.0) + 0.2 * _bump(hours, 18.0, 3.0) - 0.2 * _bump(hours, 14.0, 3.0)
    heat = config.heat_base * (1.0 + config.heat_seasonal * season) * heat_shape[None, :] * noise((n, T))

    t_amb = (config.t_mean - config.t_seasonal * season
             + config.t_diurnal * np.cos(2.0 * np.pi * (hours - 15.0) / 24.0)[None, :]
             + 20.0 * config.noise * rng.uniform(-1.0, 1.0, size=(n, T)))

    half_width = 5.0 - 2.0 * season
    bell = np.clip(np.cos(np.pi * (hours[None, :] - 12.0) / (2.0 * half_width)), 0.0, None)
    cloud = rng.uniform(0.3, 1.0, size=(n, 1))
    solar = config.solar_peak * (1.0 - config.solar_seasonal * season) * bell * cloud

    price_raw = (1.0 + 0.25 * _bump(hours, 8.0, 2.0) + 0.4 * _bump(hours, 19.0, 2.5))[None, :] \
        * (1.0 + 0.1 * season) * noise((n, T))

    matrices = {"el_demand": el, "heat_demand": heat, "t_ambient": t_amb, "solar_cf": solar, "el_price": price_raw}
    for plant in config.plants():
        hours_hit = slice(None) if plant.hours is None else list(plant.hours)
        matrices[plant.attribute][plant.day, hours_hit] *= plant.scale
        logger.debug(f"Planted {plant.attribute} x{plant.scale} on day {plant.day}")

    matrices["solar_cf"] = np.clip(matrices["solar_cf"], 0.0, 1.0)
    matrices["el_demand"] = np.clip(matrices["el_demand"], 0.0, None)
    matrices["heat_demand"] = np.clip(matrices["heat_demand"], 0.0, None)
    matrices["el_price"] = _match_price_band(matrices["el_price"], config.price_min, config.price_max,
                                             config.price_mean)

    data = Dataset.from_matrices({name: matrices[name] for name in DEFAULT_SCHEMA})
    logger.info(f"Generated synthetic dataset: {n} days, seed {config.seed}, {len(config.plants())} planted extremes")
    return data


def duplicated_day_dataset(k: int, copies: int, seed: int = 0, hours_per_day: int = 24) -> Dataset:
    """k distinct base days, each repeated ``copies`` times in shuffled order."""
    if k < 1 or copies < 1:
        raise InvalidConfig("k and copies must be >= 1")
    base = generate(SynthConfig(n_days=k, seed=seed, hours_per_day=hours_per_day, planted_extremes=[]))
    order = np.random.default_rng(seed).permutation(np.repeat(np.arange(k), copies))
    return base.select_days(order)


def dominance_dataset(n_days: int = 14, seed: int = 0, split_extremes: bool = False) -> Dataset:
    """Dataset whose extreme day(s) dominate every other day hour by hour.

    With one extreme day, that day has 1.2 times the hourly maximum heat
    demand, the hourly maximum electricity demand, the hourly minimum solar
    availability, a temperature 2 degC below the hourly minimum and the hourly
    maximum price. With ``split_extremes`` a heat-extreme day and an
    electricity-extreme day (1.2 times the electricity maximum, 0.8 times the
    solar minimum) are planted separately.

    Args:
        n_days: Total day count including the extreme days
        seed: Random seed of the base year
        split_extremes: Plant two complementary extreme days

    Returns:
        Dataset
    """
    if n_days < 3:
        raise InvalidConfig("a dominance dataset needs at least 3 days")
    base = generate(SynthConfig(n_days=n_days, seed=seed, planted_extremes=[]))
    m = {name: np.array(base.matrix(name)) for name in DEFAULT_SCHEMA}
    hi = {name: m[name].max(axis=0) for name in DEFAULT_SCHEMA}
    lo = {name: m[name].min(axis=0) for name in DEFAULT_SCHEMA}

    if split_extremes:
        a, b = n_days // 3, (2 * n_days) // 3
        m["heat_demand"][a] = 1.2 * hi["heat_demand"]
        m["t_ambient"][a] = lo["t_ambient"] - 2.0
        m["el_demand"][a] = hi["el_demand"]
        m["solar_cf"][a] = lo["solar_cf"]
        m["el_price"][a] = hi["el_price"]
        m["el_demand"][b] = 1.2 * hi["el_demand"]
        m["solar_cf"][b] = 0.8 * lo["solar_cf"]
        m["heat_demand"][b] = hi["heat_demand"]
        m["t_ambient"][b] = lo["t_ambient"]
        m["el_price"][b] = hi["el_price"]
    else:
        a = n_days // 2
        m["heat_demand"][a] = 1.2 * hi["heat_demand"]
        m["t_ambient"][a] = lo["t_ambient"] - 2.0
        m["el_demand"][a] = hi["el_demand"]
        m["solar_cf"][a] = lo["solar_cf"]
        m["el_price"][a] = hi["el_price"]
    return Dataset.from_matrices(m)
