#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Configuration settings for tsaextreme
"""

from typing import Dict, Any, List, Literal, Optional, Union
from pathlib import Path
import copy
import logging
import os

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from tsaextreme.exceptions import ConfigurationError
from tsaextreme.models.extremes import SelectionLimits
from tsaextreme.models.resys import DEFAULT_CAPEX, TechnologyParams
from tsaextreme.utils.synthgen import SynthConfig

logger = logging.getLogger(__name__)

# Default configuration
DEFAULT_CONFIG: Dict[str, Any] = {
    "run": {
        "dataset": None,            # CSV path; None generates the synthetic year
        "k": 5,
        "n_init": 10000,
        "seed": 0,
        "method": "feasibility",    # none | simple | feasibility | slack
        "modification": "feasibility_steps",  # feasibility_steps | append
        "grid_fraction": 1.0,       # share of the reference grid limit
        "grid_limit_kw": None,      # absolute limit, overrides grid_fraction
        "virtual_days": False,
        "reference": True,          # solve O_ref for comparison
        "workers": 1,
        "selection": {
            "max_extremes": 30,
            "slack_tol": 1e-6,
            "seed_simple": None,    # None: seeded for feasibility, unseeded for slack
            "slack_measure": "peak",
            "slack_order": "heat_first",
            "workers": 1,
        },
    },
    "synth": {
        "n_days": 90,
        "hours_per_day": 24,
        "seed": 0,
        "noise": 0.05,
        "el_base": 0.4,
        "el_seasonal": 0.15,
        "heat_base": 1.5,
        "heat_seasonal": 0.4,
        "t_mean": 8.0,
        "t_seasonal": 10.0,
        "t_diurnal": 4.0,
        "solar_peak": 0.8,
        "solar_seasonal": 0.3,
        "price_min": 0.190,
        "price_max": 0.370,
        "price_mean": 0.301,
        "planted_extremes": None,   # None plants the default killer day
        "killer_day": None,
    },
    "technology": {
        "capex": dict(DEFAULT_CAPEX),
        "amortization_years": 5.0,
        "interest_rate": 0.0,
        "eta_eh": 1.0,
        "eta_ch": 0.95,
        "eta_dis": 0.95,
        "cop_supply_temp": 45.0,
        "cop_quality": 0.4,
        "cop_max": 6.0,
        "cop_fixed": None,
        "c_slack": 10.0,
        "max_capacity": {},
    },
    "solver": {
        "backend": "simplex",       # simplex | highs
        "options": {},
    },
    "sweep": {
        "fractions": [1.2, 1.0, 0.8, 0.5, 0.2, 0.0],
        "check_monotone": False,
    },
    "compare": {
        "ks": [5, 9],
        "grid_fraction": 0.0,
        "method": "feasibility",
    },
    "output": {
        "directory": "output",
        "plots": True,
    },
    "logging": {
        "level": "INFO",
    },
}

ENV_OVERRIDES = {
    "TSAEXTREME_SOLVER_BACKEND": "solver.backend",
    "TSAEXTREME_WORKERS": "run.workers",
    "TSAEXTREME_LOG_LEVEL": "logging.level",
}

Method = Literal["none", "simple", "feasibility", "slack"]


class RunConfig(BaseModel):
    """One aggregated run: dataset, clustering, selection method and grid limit."""
    model_config = ConfigDict(extra="forbid")

    dataset: Optional[str] = None
    k: int = Field(5, ge=1)
    n_init: int = Field(10000, ge=1)
    seed: int = 0
    method: Method = "feasibility"
    modification: Literal["feasibility_steps", "append"] = "feasibility_steps"
    grid_fraction: float = Field(1.0, ge=0.0)
    grid_limit_kw: Optional[float] = Field(None, ge=0.0)
    virtual_days: bool = False
    reference: bool = True
    workers: int = Field(1, ge=1)
    technology: TechnologyParams = Field(default_factory=TechnologyParams)
    selection: SelectionLimits = Field(default_factory=SelectionLimits)

    @field_validator("modification", mode="before")
    @classmethod
    def _steps_alias(cls, value: Any) -> Any:
        return "feasibility_steps" if value == "steps" else value


class SolverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    backend: Literal["simplex", "highs"] = "simplex"
    options: Dict[str, Any] = Field(default_factory=dict)


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fractions: List[float] = Field(default_factory=lambda: [1.2, 1.0, 0.8, 0.5, 0.2, 0.0], min_length=1)
    check_monotone: bool = False

    @field_validator("fractions")
    @classmethod
    def _non_negative(cls, value: List[float]) -> List[float]:
        if any(f < 0 for f in value):
            raise ValueError("grid fractions must be non-negative")
        return value


class CompareConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ks: List[int] = Field(default_factory=lambda: [5, 9], min_length=1)
    grid_fraction: float = Field(0.0, ge=0.0)
    method: Method = "feasibility"


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "output"
    plots: bool = True


class LoggingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    @field_validator("level", mode="before")
    @classmethod
    def _upper(cls, value: Any) -> Any:
        return value.upper() if isinstance(value, str) else value


class CliConfig(BaseModel):
    """Complete configuration tree."""
    model_config = ConfigDict(extra="forbid")

    run: RunConfig = Field(default_factory=RunConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)
    technology: TechnologyParams = Field(default_factory=TechnologyParams)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    compare: CompareConfig = Field(default_factory=CompareConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    def run_config(self) -> RunConfig:
        """Run settings with the top-level technology section applied."""
        return self.run.model_copy(update={"technology": self.technology})


def _deep_merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict) and key not in ("capex", "max_capacity", "options"):
            _deep_merge(base[key], value)
        elif isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = {**base[key], **value}
        else:
            base[key] = value
    return base


def set_dotted(tree: Dict[str, Any], key: str, value: Any) -> None:
    """Set ``a.b.c`` in a nested dict, creating levels as needed."""
    parts = key.split(".")
    node = tree
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigurationError(f"'{part}' in '{key}' is not a section", key)
        node = child
    node[parts[-1]] = value


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None,
                use_env: bool = True) -> CliConfig:
    """Load configuration: defaults < YAML file < environment < overrides.

    Args:
        path: Optional YAML config file
        overrides: Dotted keys to values, typically from command-line flags
        use_env: Apply ``.env`` and TSAEXTREME_* environment variables

    Returns:
        Validated configuration

    Raises:
        ConfigurationError: On unreadable files, unknown keys or invalid values
    """
    tree = copy.deepcopy(DEFAULT_CONFIG)

    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                loaded = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError(f"cannot read config file {path}: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"config file {path} must contain a mapping")
        _deep_merge(tree, loaded)

    if use_env:
        load_dotenv()
        for env_name, key in ENV_OVERRIDES.items():
            if os.getenv(env_name):
                set_dotted(tree, key, os.getenv(env_name))

    for key, value in (overrides or {}).items():
        if value is not None:
            set_dotted(tree, key, value)

    # technology has a single home in the tree; run_config() copies it into the run
    if isinstance(tree.get("run"), dict) and "technology" in tree["run"]:
        raise ConfigurationError("technology settings belong in the top-level 'technology' section",
                                 "run.technology")

    try:
        return CliConfig.model_validate(tree)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        raise ConfigurationError(f"invalid configuration at '{key}': {first['msg']}", key) from e
