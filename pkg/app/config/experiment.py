"""
This module defines the experiment configuration and its file loader.

Config files are flat `key=value` text. Keys are either SystemParams field
names or ExperimentConfig field names; list values are comma separated and
anything else is rejected, so a file documents exactly what an experiment ran
with.
"""

import os
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.errors import ResourceNotFoundError, ValidationError
from app.models import GridSpec, SystemParams
from app.utils.deserialize_instance import deserialize_instance
from app.utils.logger import get_logger

logger = get_logger(__name__)


class ExperimentMode(str, Enum):
    EEM = "EEM"
    SEM = "SEM"
    BOTH = "BOTH"
    ORACLE_CHECK = "ORACLE_CHECK"


class SweepAxis(str, Enum):
    """SystemParams field a sweep varies; NONE runs the base parameters only."""

    NONE = "none"
    P_MAX_DBM = "p_max_dbm"
    N_USERS = "n_users"
    N_RELAYS = "n_relays"
    CELL_RADIUS_M = "cell_radius_m"


_INTEGER_AXES = {SweepAxis.N_USERS, SweepAxis.N_RELAYS}

# Parameters of the convergence-trace setting: no relays, a 1 km cell, 0 dBm.
TRACE_PARAM_DEFAULTS: Dict[str, str] = {
    "n_relays": "0",
    "cell_radius_m": "1000",
    "p_max_dbm": "0",
}


class ExperimentConfig(BaseModel):
    """A Monte-Carlo experiment.

    Attributes:
        params (SystemParams): Base system parameters.
        sweep_axis (SweepAxis): Parameter varied across sweep points.
        sweep_values (Tuple[float, ...]): Sorted values of the swept parameter.
        n_channel_samples (int): Channel realizations per sweep point.
        master_seed (int): Seed every per-sample seed is derived from.
        mode (ExperimentMode): Which allocators run on each sample.
        output_path (Optional[str]): CSV destination; stdout when unset.
        workers (int): Worker processes evaluating samples.
        oracle_levels_per_power (int): Power levels of the oracle grid.
        oracle_beta_levels (int): Split levels of the oracle grid.
        oracle_max_evaluations (int): Evaluation budget of the oracle grid.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    params: SystemParams = Field(default_factory=SystemParams)
    sweep_axis: SweepAxis = SweepAxis.NONE
    sweep_values: Tuple[float, ...] = ()
    n_channel_samples: int = Field(1, ge=1)
    master_seed: int = Field(0, ge=0)
    mode: ExperimentMode = ExperimentMode.EEM
    output_path: Optional[str] = None
    workers: int = Field(1, ge=1)
    oracle_levels_per_power: int = Field(32, ge=2)
    oracle_beta_levels: int = Field(16, ge=2)
    oracle_max_evaluations: int = Field(20_000_000, ge=1)

    @model_validator(mode="after")
    def _check_sweep(self) -> "ExperimentConfig":
        if self.sweep_axis is SweepAxis.NONE:
            if self.sweep_values:
                raise ValueError("sweep_values requires a sweep_axis")
            return self
        if not self.sweep_values:
            raise ValueError("sweep_values must not be empty")
        if list(self.sweep_values) != sorted(self.sweep_values):
            raise ValueError("sweep_values must be sorted")
        if self.sweep_axis in _INTEGER_AXES and any(
            value != int(value) for value in self.sweep_values
        ):
            raise ValueError(f"{self.sweep_axis.value} values must be integers")
        return self

    @property
    def grid(self) -> GridSpec:
        return GridSpec(
            levels_per_power=self.oracle_levels_per_power,
            beta_levels=self.oracle_beta_levels,
            max_evaluations=self.oracle_max_evaluations,
        )

    def sweep_points(self) -> List[Tuple[Optional[float], SystemParams]]:
        """Return (sweep value, parameters) for every point, in sweep order."""
        if self.sweep_axis is SweepAxis.NONE:
            return [(None, self.params)]
        field = self.sweep_axis.value
        points = []
        for value in self.sweep_values:
            typed = int(value) if self.sweep_axis in _INTEGER_AXES else float(value)
            data = {**self.params.model_dump(), field: typed}
            points.append((value, deserialize_instance(SystemParams, data)))
        return points

    def with_overrides(
        self,
        master_seed: Optional[int] = None,
        output_path: Optional[str] = None,
        workers: Optional[int] = None,
        mode: Optional[ExperimentMode] = None,
    ) -> "ExperimentConfig":
        """Return a validated copy with the given command-line overrides applied."""
        data = self.model_dump()
        for key, value in (
            ("master_seed", master_seed),
            ("output_path", output_path),
            ("workers", workers),
            ("mode", mode),
        ):
            if value is not None:
                data[key] = value
        return deserialize_instance(ExperimentConfig, data)


def parse_config_values(
    values: Mapping[str, Optional[str]],
    param_defaults: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """
    Build an ExperimentConfig from raw key/value strings.

    Args:
        values (Mapping[str, Optional[str]]): Parsed file entries.
        param_defaults (Optional[Mapping[str, str]]): SystemParams values used
            when the entries do not set them.

    Raises:
        ValidationError: On unknown keys, keys without a value, or values
            violating the field constraints.
    """
    param_fields = set(SystemParams.model_fields)
    experiment_fields = set(ExperimentConfig.model_fields) - {"params"}
    params: Dict[str, Any] = dict(param_defaults or {})
    data: Dict[str, Any] = {}

    for key, raw in values.items():
        if raw is None:
            raise ValidationError(f"Config key '{key}' has no value")
        raw = raw.strip()
        if key in param_fields:
            params[key] = raw
        elif key == "sweep_values":
            items = [item.strip() for item in raw.split(",") if item.strip()]
            data[key] = items
        elif key == "output_path":
            data[key] = raw or None
        elif key in experiment_fields:
            data[key] = raw
        else:
            raise ValidationError(f"Unknown config key '{key}'")

    data["params"] = params
    return deserialize_instance(ExperimentConfig, data)


def load_experiment_config(
    path: str, param_defaults: Optional[Mapping[str, str]] = None
) -> ExperimentConfig:
    """
    Load an experiment config file.

    Raises:
        ResourceNotFoundError: If `path` does not exist.
        ValidationError: If the file content is invalid.
    """
    if not os.path.isfile(path):
        logger.error("[ExperimentConfig] Config file not found: %s", path)
        raise ResourceNotFoundError(f"Config file '{path}' not found")
    config = parse_config_values(dotenv_values(path), param_defaults)
    logger.debug("[ExperimentConfig] Loaded %s", path)
    return config
