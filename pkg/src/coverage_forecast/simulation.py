"""Seeded Monte Carlo engine for the submarine sweep and the normal-model t interval."""

import csv
import logging
import math
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from coverage_forecast._compat import StrEnum
from pathlib import Path
from typing import Protocol, TypeVar

import numpy as np

from coverage_forecast.constants import (
    BOTH,
    EITHER,
    NP,
    SD,
    STAT_D,
    STAT_MAX_WIDTH,
    STAT_NESTING,
    STAT_STUDENTIZED_RANGE,
    STAT_W,
    STAT_WIDTH,
    SUBMARINE_PROCEDURES,
    T,
    TRIVIAL,
    UMP,
)
from coverage_forecast.exceptions import MisconfiguredExperimentError, UnknownProcedureError, UnknownStatisticError
from coverage_forecast.model import CoverageOutcome, Interval, SimulationConfig, TrialRecord, UniformDesign
from coverage_forecast.procedures import np_bounds, sd_bounds, t_bounds, ump_bounds

logger = logging.getLogger(__name__)

R = TypeVar("R")

STREAM_TRAIN = 0
STREAM_EVALUATE = 1
STREAM_NORMAL = 2
STREAM_MONTY = 3
STREAM_LABELS = 4

RECORD_CSV_COLUMNS = ("theta", "hull_width", "x1", "x2", "proc", "lower", "upper", "covered", "D", "W")


class JointMode(StrEnum):
    """How two coverage indicators are combined."""

    EITHER = "either"
    BOTH = "both"


def trial_generator(seed: int, config_index: int, stream: int, start: int = 0) -> np.random.Generator:
    """
    Counter-based generator positioned at trial ``start`` of one configuration.

    Philox is keyed by (seed, stream, config index) and each counter block yields
    four 64-bit words, i.e. two trials of two uniforms. Starting a chunk at an even
    trial index therefore reproduces exactly the draws of a single sequential pass.
    """
    if start % 2:
        raise ValueError(f"Chunks must start at an even trial index, got {start}")
    key = np.array([seed, (stream << 32) | config_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=start // 2))


def chunk_bounds(n_trials: int, chunk_size: int) -> Iterator[tuple[int, int]]:
    """Yield (start, size) for consecutive chunks covering ``n_trials``."""
    for start in range(0, n_trials, chunk_size):
        yield start, min(chunk_size, n_trials - start)


class OutcomeRecords(Protocol):
    """Anything that exposes coverage indicators and statistics column-wise."""

    def __len__(self) -> int: ...

    def outcome(self, outcome_id: str) -> np.ndarray: ...

    def statistic(self, statistic_id: str) -> np.ndarray: ...


@dataclass(frozen=True)
class TrialBatch:
    """Column-wise block of trial records; row i is one ``TrialRecord``."""

    theta: np.ndarray
    hull_width: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    lower: Mapping[str, np.ndarray] = field(default_factory=dict)
    upper: Mapping[str, np.ndarray] = field(default_factory=dict)
    covered: Mapping[str, np.ndarray] = field(default_factory=dict)
    stats: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.x1)

    @property
    def procedures(self) -> tuple[str, ...]:
        """Procedure ids carried by this batch."""
        return tuple(self.covered)

    def outcome(self, outcome_id: str) -> np.ndarray:
        """Boolean coverage indicators for a procedure, or for the UMP + SD composite."""
        if outcome_id in self.covered:
            return self.covered[outcome_id]
        if outcome_id in (EITHER, BOTH) and UMP in self.covered and SD in self.covered:
            combine = np.logical_or if outcome_id == EITHER else np.logical_and
            return combine(self.covered[UMP], self.covered[SD])
        raise UnknownProcedureError(f"Records carry no outcome {outcome_id!r}; available: {self.procedures}")

    def statistic(self, statistic_id: str) -> np.ndarray:
        """Values of a per-trial statistic."""
        try:
            return self.stats[statistic_id]
        except KeyError:
            raise UnknownStatisticError(f"Records carry no statistic {statistic_id!r}; available: {tuple(self.stats)}") from None

    def records(self) -> Iterator[TrialRecord]:
        """Materialise the rows as ``TrialRecord`` values."""
        for i in range(len(self)):
            yield TrialRecord(
                theta=float(self.theta[i]),
                hull_width=float(self.hull_width[i]),
                x1=float(self.x1[i]),
                x2=float(self.x2[i]),
                intervals={p: Interval(float(self.lower[p][i]), float(self.upper[p][i])) for p in self.procedures},
                outcomes={p: CoverageOutcome(int(self.covered[p][i])) for p in self.procedures},
                stats={s: float(values[i]) for s, values in self.stats.items()},
            )

    @classmethod
    def concat(cls, batches: Sequence["TrialBatch"]) -> "TrialBatch":
        """Stack batches that carry the same procedures and statistics."""
        if not batches:
            raise MisconfiguredExperimentError("No batches to concatenate")
        first = batches[0]

        def stack(name: str) -> np.ndarray:
            return np.concatenate([getattr(b, name) for b in batches])

        def stack_map(name: str) -> dict[str, np.ndarray]:
            return {key: np.concatenate([getattr(b, name)[key] for b in batches]) for key in getattr(first, name)}

        return cls(
            theta=stack("theta"),
            hull_width=stack("hull_width"),
            x1=stack("x1"),
            x2=stack("x2"),
            lower=stack_map("lower"),
            upper=stack_map("upper"),
            covered=stack_map("covered"),
            stats=stack_map("stats"),
        )

    @classmethod
    def from_records(cls, records: Iterable[TrialRecord]) -> "TrialBatch":
        """Pack ``TrialRecord`` rows back into columns."""
        records = list(records)
        if not records:
            raise MisconfiguredExperimentError("No records to pack")
        procedures = list(records[0].intervals)
        statistics = list(records[0].stats)
        return cls(
            theta=np.array([r.theta for r in records]),
            hull_width=np.array([r.hull_width for r in records]),
            x1=np.array([r.x1 for r in records]),
            x2=np.array([r.x2 for r in records]),
            lower={p: np.array([r.intervals[p].lower for r in records]) for p in procedures},
            upper={p: np.array([r.intervals[p].upper for r in records]) for p in procedures},
            covered={p: np.array([bool(r.outcomes[p]) for r in records]) for p in procedures},
            stats={s: np.array([r.stats[s] for r in records]) for s in statistics},
        )


def simulate_batch(design: UniformDesign, rng: np.random.Generator, size: int, procedures: Sequence[str] = SUBMARINE_PROCEDURES) -> TrialBatch:
    """Draw ``size`` trials from ``design`` and evaluate every submarine procedure on them."""
    unknown = set(procedures) - set(SUBMARINE_PROCEDURES)
    if unknown:
        raise UnknownProcedureError(f"Unknown submarine procedure(s): {sorted(unknown)}")
    x1, x2 = design.sample(rng, size)
    h = design.half_width
    bounds = {
        NP: np_bounds(x1, x2),
        UMP: ump_bounds(x1, x2, h),
        SD: sd_bounds(x1, x2, h),
        TRIVIAL: (np.full(size, -math.inf), np.full(size, math.inf)),
    }
    theta = design.theta
    covered = {p: (lo <= theta) & (theta <= hi) for p, (lo, hi) in bounds.items()}

    np_width = bounds[NP][1] - bounds[NP][0]
    ump_width = bounds[UMP][1] - bounds[UMP][0]
    sd_width = bounds[SD][1] - bounds[SD][0]
    relative = np.clip(np_width / design.hull_width, 0.0, 1.0)
    # shared midpoint: nesting reduces to a width comparison, ties go to UMP-inside-SD
    sd_inside = sd_width < ump_width
    stats = {
        STAT_D: relative,
        # the UMP interval never exceeds half the window
        STAT_W: np.clip(ump_width / design.hull_width, 0.0, 0.5),
        STAT_WIDTH: np_width,
        STAT_NESTING: sd_inside.astype(float),
        # the wider interval of the pair is at most half the window
        STAT_MAX_WIDTH: np.clip(np.where(sd_inside, ump_width, sd_width) / design.hull_width, 0.0, 0.5),
    }
    return TrialBatch(
        theta=np.full(size, theta),
        hull_width=np.full(size, design.hull_width),
        x1=x1,
        x2=x2,
        lower={p: bounds[p][0] for p in procedures},
        upper={p: bounds[p][1] for p in procedures},
        covered={p: covered[p] for p in procedures},
        stats=stats,
    )


def iter_config_batches(
    config: SimulationConfig,
    config_index: int,
    procedures: Sequence[str] = SUBMARINE_PROCEDURES,
    stream: int = STREAM_TRAIN,
) -> Iterator[TrialBatch]:
    """All trials of one configuration, chunk by chunk."""
    design = config.designs()[config_index]
    for start, size in chunk_bounds(config.n_trials, config.chunk_size):
        rng = trial_generator(config.seed, config_index, stream, start)
        yield simulate_batch(design, rng, size, procedures)


def run_sweep(config: SimulationConfig, procedures: Sequence[str] = SUBMARINE_PROCEDURES, stream: int = STREAM_TRAIN) -> Iterator[TrialBatch]:
    """
    Stream the whole sweep, configuration-major.

    The stream is a pure function of (config, procedures, stream); chunk size only
    changes how rows are grouped into batches.
    """
    for config_index, design in enumerate(config.designs()):
        logger.debug(f"Simulating config {config_index}: theta={design.theta}, hull_width={design.hull_width}")
        yield from iter_config_batches(config, config_index, procedures, stream)


def iter_records(config: SimulationConfig, procedures: Sequence[str] = SUBMARINE_PROCEDURES, stream: int = STREAM_TRAIN) -> Iterator[TrialRecord]:
    """Row-wise view of ``run_sweep``."""
    for batch in run_sweep(config, procedures, stream):
        yield from batch.records()


def map_configs(config: SimulationConfig, worker: Callable[[int], R], threads: int = 1) -> list[R]:
    """Run ``worker(config_index)`` for every configuration; results come back in config order."""
    indices = range(len(config.designs()))
    if threads <= 1:
        return [worker(i) for i in indices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, indices))


def as_batches(records: "OutcomeRecords | Iterable") -> list:
    """Normalise a batch, an iterable of batches, or an iterable of ``TrialRecord`` rows."""
    if hasattr(records, "outcome"):
        return [records]
    records = list(records)
    if records and isinstance(records[0], TrialRecord):
        return [TrialBatch.from_records(records)]
    return records


def _proportion(hits: int, n: int) -> float:
    if n == 0:
        raise MisconfiguredExperimentError("Cannot compute a proportion over zero records")
    return hits / n


def marginal_coverage(records: "OutcomeRecords | Iterable", procedure_id: str) -> float:
    """Fraction of records whose ``procedure_id`` interval covered."""
    batches = as_batches(records)
    hits = sum(int(np.count_nonzero(b.outcome(procedure_id))) for b in batches)
    return _proportion(hits, sum(len(b) for b in batches))


def joint_coverage(records: "OutcomeRecords | Iterable", proc_a: str, proc_b: str, mode: "JointMode | str" = JointMode.EITHER) -> float:
    """Fraction of records where either (or both) of two procedures covered."""
    combine = np.logical_or if JointMode(mode) is JointMode.EITHER else np.logical_and
    batches = as_batches(records)
    hits = sum(int(np.count_nonzero(combine(b.outcome(proc_a), b.outcome(proc_b)))) for b in batches)
    return _proportion(hits, sum(len(b) for b in batches))


class CoverageTally:
    """Mergeable covered-counts per outcome id."""

    def __init__(self, outcome_ids: Sequence[str]):
        self.outcome_ids = tuple(outcome_ids)
        self.n = 0
        self.hits = dict.fromkeys(self.outcome_ids, 0)

    def add(self, records: OutcomeRecords) -> None:
        """Count one batch."""
        self.n += len(records)
        for outcome_id in self.outcome_ids:
            self.hits[outcome_id] += int(np.count_nonzero(records.outcome(outcome_id)))

    def merge(self, other: "CoverageTally") -> "CoverageTally":
        """Return a tally holding the counts of both."""
        merged = CoverageTally(self.outcome_ids)
        merged.n = self.n + other.n
        merged.hits = {key: self.hits[key] + other.hits[key] for key in self.outcome_ids}
        return merged

    def proportions(self) -> dict[str, float]:
        """Coverage proportion per outcome id."""
        return {key: _proportion(hits, self.n) for key, hits in self.hits.items()}


@dataclass(frozen=True)
class ConfigSummary:
    """Coverage and score summary of one configuration (or of the pooled sweep)."""

    theta: float
    hull_width: float
    n: int
    coverage_by_procedure: Mapping[str, float]
    mean_scores: Mapping[tuple[str, str], float] = field(default_factory=dict)


@dataclass(frozen=True)
class SweepResult:
    """Per-configuration summaries keyed by (theta, hull_width), plus the pooled summary."""

    per_config: Mapping[tuple[float, float], ConfigSummary]
    pooled: ConfigSummary


def write_records_csv(path: Path, batches: Iterable[TrialBatch]) -> int:
    """Write one row per (trial, procedure); returns the number of rows written."""
    rows = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RECORD_CSV_COLUMNS)
        for batch in batches:
            columns = [batch.theta.tolist(), batch.hull_width.tolist(), batch.x1.tolist(), batch.x2.tolist()]
            d, w = batch.stats[STAT_D].tolist(), batch.stats[STAT_W].tolist()
            for procedure in batch.procedures:
                lower, upper = batch.lower[procedure].tolist(), batch.upper[procedure].tolist()
                covered = batch.covered[procedure].astype(int).tolist()
                for i in range(len(batch)):
                    writer.writerow(
                        (repr(columns[0][i]), repr(columns[1][i]), repr(columns[2][i]), repr(columns[3][i]), procedure,
                         repr(lower[i]), repr(upper[i]), covered[i], repr(d[i]), repr(w[i]))
                    )
                    rows += 1
    return rows


@dataclass(frozen=True)
class NormalTrialBatch:
    """t-interval trials from a normal model with known mean."""

    mu: float
    lower: np.ndarray
    upper: np.ndarray
    studentized_range: np.ndarray

    def __len__(self) -> int:
        return len(self.lower)

    def outcome(self, outcome_id: str) -> np.ndarray:
        """Coverage of the t interval."""
        if outcome_id != T:
            raise UnknownProcedureError(f"Normal-model records carry only {T!r}, not {outcome_id!r}")
        return (self.lower <= self.mu) & (self.mu <= self.upper)

    def statistic(self, statistic_id: str) -> np.ndarray:
        """Absolute interval width, or the sample range in units of s."""
        if statistic_id == STAT_WIDTH:
            return self.upper - self.lower
        if statistic_id == STAT_STUDENTIZED_RANGE:
            return self.studentized_range
        raise UnknownStatisticError(f"Normal-model records carry {STAT_WIDTH!r} and {STAT_STUDENTIZED_RANGE!r}, not {statistic_id!r}")

    @property
    def n_degenerate(self) -> int:
        """Trials whose sample variance was exactly zero."""
        return int(np.count_nonzero(self.upper == self.lower))


def simulate_t_trials(
    n: int,
    alpha: float,
    n_trials: int,
    seed: int,
    mu: float = 0.0,
    sigma: float = 1.0,
    config_index: int = 0,
) -> NormalTrialBatch:
    """Draw ``n_trials`` normal samples of size ``n`` and build their t intervals."""
    rng = trial_generator(seed, config_index, STREAM_NORMAL)
    values = rng.normal(mu, sigma, size=(n_trials, n))
    lower, upper = t_bounds(values, alpha)
    s = values.std(axis=1, ddof=1)
    spread = values.max(axis=1) - values.min(axis=1)
    # zero-variance samples also have zero range
    studentized = np.divide(spread, s, out=np.zeros_like(spread), where=s > 0)
    batch = NormalTrialBatch(mu=mu, lower=lower, upper=upper, studentized_range=studentized)
    if batch.n_degenerate:
        logger.warning(f"{batch.n_degenerate} degenerate (zero-width) t intervals")
    return batch
