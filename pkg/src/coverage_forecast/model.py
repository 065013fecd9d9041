import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import IntEnum
from types import MappingProxyType

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, field_validator

from coverage_forecast.constants import (
    DEFAULT_ALPHA,
    DEFAULT_CHUNK_SIZE,
    DEFAULT_HULL_WIDTH,
    DEFAULT_HULL_WIDTH_GRID,
    DEFAULT_N_TRIALS,
    DEFAULT_SEED,
    DEFAULT_THETA_GRID,
)
from coverage_forecast.exceptions import ProcedureError


@dataclass(frozen=True, slots=True)
class Interval:
    """
    Closed interval on the extended real line.

    Unbounded endpoints are ``-math.inf`` / ``math.inf``; they never take part in
    arithmetic, ``width`` checks for them explicitly.
    """

    lower: float
    upper: float

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValueError(f"Interval endpoints must not be NaN: [{self.lower}, {self.upper}]")
        if self.lower > self.upper:
            raise ValueError(f"Interval lower endpoint {self.lower} exceeds upper endpoint {self.upper}")
        if self.lower == math.inf or self.upper == -math.inf:
            raise ValueError(f"Interval [{self.lower}, {self.upper}] has an endpoint on the wrong side")

    @classmethod
    def unbounded(cls) -> "Interval":
        """Return the trivial interval [-inf, +inf]."""
        return cls(-math.inf, math.inf)

    @property
    def is_bounded(self) -> bool:
        """Whether both endpoints are finite."""
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    def width(self) -> float:
        """Length of the interval, +inf when either endpoint is infinite."""
        if not self.is_bounded:
            return math.inf
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        """Centre of a bounded interval."""
        if not self.is_bounded:
            return math.nan
        return 0.5 * (self.lower + self.upper)

    def contains(self, other: "Interval") -> bool:
        """Whether ``other`` is a subset of this interval."""
        return self.lower <= other.lower and other.upper <= self.upper


class CoverageOutcome(IntEnum):
    """Coverage indicator z for a single realised interval."""

    MISSED = 0
    COVERED = 1


def covers(interval: Interval, theta: float) -> CoverageOutcome:
    """Return 1 iff lower <= theta <= upper; both ends inclusive."""
    return CoverageOutcome(int(interval.lower <= theta <= interval.upper))


class UniformDesign(BaseModel):
    """Two bubbles drawn uniformly over a hull of ``hull_width`` centred on the hatch ``theta``."""

    model_config = ConfigDict(frozen=True)

    theta: float
    hull_width: PositiveFloat = DEFAULT_HULL_WIDTH

    @property
    def half_width(self) -> float:
        """Half the support window, h."""
        return 0.5 * self.hull_width

    def support(self) -> Interval:
        """Window the samples are drawn from."""
        return Interval(self.theta - self.half_width, self.theta + self.half_width)

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """
        Draw ``size`` independent pairs (x1, x2).

        Each trial consumes exactly two consecutive uniforms from ``rng``, x1 first.
        """
        u = rng.random((size, 2))
        start = self.theta - self.half_width
        return start + self.hull_width * u[:, 0], start + self.hull_width * u[:, 1]


class SimulationConfig(BaseModel):
    """Sweep over hatch locations and hull widths."""

    model_config = ConfigDict(frozen=True)

    theta_grid: list[float] = Field(default_factory=lambda: list(DEFAULT_THETA_GRID), min_length=1)
    hull_width_grid: list[PositiveFloat] = Field(default_factory=lambda: list(DEFAULT_HULL_WIDTH_GRID), min_length=1)
    n_trials: PositiveInt = DEFAULT_N_TRIALS
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0.0, lt=1.0)
    chunk_size: PositiveInt = DEFAULT_CHUNK_SIZE

    @field_validator("chunk_size")
    @classmethod
    def _even_chunks(cls, value: int) -> int:
        # two uniforms per trial, four per counter block
        if value % 2:
            raise ValueError(f"chunk_size must be even, got {value}")
        return value

    @property
    def level(self) -> float:
        """Nominal coverage level 1 - alpha."""
        return 1.0 - self.alpha

    def designs(self) -> list[UniformDesign]:
        """All (theta, hull_width) designs, theta-major; the list index is the config index."""
        return [UniformDesign(theta=theta, hull_width=width) for theta in self.theta_grid for width in self.hull_width_grid]


def _frozen(mapping: Mapping) -> Mapping:
    return MappingProxyType(dict(mapping))


@dataclass(frozen=True)
class TrialRecord:
    """One simulated experiment with every requested procedure's interval and outcome."""

    theta: float
    hull_width: float
    x1: float
    x2: float
    intervals: Mapping[str, Interval] = field(default_factory=dict)
    outcomes: Mapping[str, CoverageOutcome] = field(default_factory=dict)
    stats: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "intervals", _frozen(self.intervals))
        object.__setattr__(self, "outcomes", _frozen(self.outcomes))
        object.__setattr__(self, "stats", _frozen(self.stats))
        for procedure_id, interval in self.intervals.items():
            if self.outcomes.get(procedure_id) != covers(interval, self.theta):
                raise ProcedureError(f"Outcome for {procedure_id!r} disagrees with its interval {interval} at theta={self.theta}")
        half_width = 0.5 * self.hull_width
        slack = 1e-12 * max(1.0, abs(self.theta) + half_width)
        for x in (self.x1, self.x2):
            if not self.theta - half_width - slack <= x <= self.theta + half_width + slack:
                raise ProcedureError(f"Sample {x} lies outside the support of theta={self.theta}, hull_width={self.hull_width}")
