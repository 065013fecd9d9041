import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from pydantic import ConfigDict, Field, PositiveInt, field_validator

from coverage_forecast.constants import (
    DEFAULT_BINS_D,
    DEFAULT_BINS_OUTER,
    DEFAULT_BINS_W,
    DEFAULT_OUT_DIR,
    MIN_BIN_OCCUPANCY,
    OUT_DIR_ENV,
    SUBMARINE_PROCEDURES,
    THETA_FREE_TOLERANCE,
)
from coverage_forecast.model import SimulationConfig
from coverage_forecast.scoring import ScoringRuleKind

logger = logging.getLogger(__name__)


def default_out_dir() -> Path:
    """Output directory from the environment, else ``output/``."""
    return Path(os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR))


class RunConfig(SimulationConfig):
    """A submarine run: the sweep plus binning, outputs and evaluation settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    bins_d: PositiveInt = DEFAULT_BINS_D
    bins_w: PositiveInt = DEFAULT_BINS_W
    bins_outer: PositiveInt = DEFAULT_BINS_OUTER
    procedures: list[str] = Field(default_factory=lambda: list(SUBMARINE_PROCEDURES), min_length=1)
    out_dir: Path = Field(default_factory=default_out_dir)
    threads: PositiveInt = 1
    rule: ScoringRuleKind = ScoringRuleKind.BRIER
    min_occupancy: PositiveInt = MIN_BIN_OCCUPANCY
    theta_free_tolerance: float = Field(default=THETA_FREE_TOLERANCE, gt=0.0)

    @field_validator("procedures")
    @classmethod
    def _known_procedures(cls, value: list[str]) -> list[str]:
        unknown = [p for p in value if p not in SUBMARINE_PROCEDURES]
        if unknown:
            raise ValueError(f"Unknown procedure(s) {unknown}; choose from {list(SUBMARINE_PROCEDURES)}")
        return value

    def simulation(self) -> SimulationConfig:
        """The sweep part of the run."""
        return SimulationConfig(**{name: getattr(self, name) for name in SimulationConfig.model_fields})


def read_config_file(path: Path) -> dict[str, Any]:
    """Flat key/value table from a TOML file."""
    with open(path, "rb") as f:
        values = tomllib.load(f)
    nested = [key for key, value in values.items() if isinstance(value, dict)]
    if nested:
        raise ValueError(f"{path}: config keys must be flat, found tables {nested}")
    return values


def load_run_config(path: "Path | None" = None, overrides: "Mapping[str, Any] | None" = None) -> RunConfig:
    """Build a ``RunConfig`` from an optional file; non-None ``overrides`` (command-line flags) win."""
    values = read_config_file(path) if path is not None else {}
    if path is not None:
        logger.info(f"Loaded {len(values)} setting(s) from {path}")
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    return RunConfig(**values)
