"""Conditional-coverage look-up tables, theta-freeness checks and forecast rules."""

import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from coverage_forecast._compat import StrEnum

import numpy as np

from coverage_forecast.constants import (
    DEFAULT_ALPHA,
    MIN_BIN_OCCUPANCY,
    NOISE_ALLOWANCE_SE,
    STAT_STUDENTIZED_RANGE,
    STAT_WIDTH,
    T,
    T_DESIGNS,
    THETA_FREE_TOLERANCE,
)
from coverage_forecast.exceptions import (
    BinningMismatchError,
    MisconfiguredExperimentError,
    StatisticOutOfRangeError,
)
from coverage_forecast.procedures import t_critical
from coverage_forecast.scoring import Forecast, ScoreTally, ScoringRuleKind, across_config_variance
from coverage_forecast.simulation import OutcomeRecords, as_batches, simulate_t_trials

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Binning:
    """Partition of a statistic's range; bins are [lo, hi) except the last, which is closed."""

    edges: tuple[float, ...]

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        if len(edges) < 2:
            raise ValueError(f"A binning needs at least two edges, got {edges}")
        if not all(math.isfinite(e) for e in edges):
            raise ValueError(f"Bin edges must be finite, got {edges}")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError(f"Bin edges must be strictly increasing, got {edges}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def uniform(cls, lower: float, upper: float, n_bins: int) -> "Binning":
        """``n_bins`` equal-width bins on [lower, upper]."""
        if n_bins < 1:
            raise ValueError(f"n_bins must be positive, got {n_bins}")
        return cls(tuple(np.linspace(lower, upper, n_bins + 1).tolist()))

    @property
    def n_bins(self) -> int:
        """Number of bins."""
        return len(self.edges) - 1

    def bounds(self, index: int) -> tuple[float, float]:
        """Edges of bin ``index``."""
        return self.edges[index], self.edges[index + 1]

    def locate(self, values: "np.ndarray | float") -> np.ndarray:
        """Bin index per value, -1 for values outside the binning (or NaN)."""
        values = np.asarray(values, dtype=float)
        edges = np.asarray(self.edges)
        index = np.searchsorted(edges, values, side="right") - 1
        index = np.where(values == edges[-1], self.n_bins - 1, index)
        outside = ~((values >= edges[0]) & (values <= edges[-1]))
        return np.where(outside, -1, index)


@dataclass(frozen=True)
class ConditionalCoverageTable:
    """Empirical P(cover | statistic in bin); empty bins carry no estimate."""

    statistic_id: str
    procedure_id: str
    binning: Binning
    counts: tuple[int, ...]
    hits: tuple[int, ...]

    def __post_init__(self):
        if len(self.counts) != self.binning.n_bins or len(self.hits) != self.binning.n_bins:
            raise ValueError(f"Table for {self.statistic_id!r} needs {self.binning.n_bins} bins of counts and hits")
        if any(h > c or h < 0 for h, c in zip(self.hits, self.counts)):
            raise ValueError("Covered counts must lie between 0 and the bin count")

    @property
    def n(self) -> int:
        """Number of tabulated trials."""
        return sum(self.counts)

    @property
    def per_bin(self) -> list[tuple[int, "float | None"]]:
        """(count, coverage) per bin; coverage is None for an empty bin."""
        return [(c, h / c if c else None) for c, h in zip(self.counts, self.hits)]

    def coverage_array(self) -> np.ndarray:
        """Per-bin coverage with NaN for empty bins."""
        counts = np.asarray(self.counts, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(counts > 0, np.asarray(self.hits) / counts, np.nan)

    def marginal_coverage(self) -> float:
        """Coverage over all tabulated trials."""
        if self.n == 0:
            raise MisconfiguredExperimentError(f"Table for {self.statistic_id!r} is empty")
        return sum(self.hits) / self.n

    def weighted_coverage(self) -> float:
        """Count-weighted mean of the per-bin coverage; equals ``marginal_coverage`` (tower property)."""
        if self.n == 0:
            raise MisconfiguredExperimentError(f"Table for {self.statistic_id!r} is empty")
        return math.fsum(c * coverage for c, coverage in self.per_bin if coverage is not None) / self.n

    def coverage_range(self, min_occupancy: int = 1) -> float:
        """Spread of per-bin coverage over bins holding at least ``min_occupancy`` trials."""
        coverage = self.coverage_array()[np.asarray(self.counts) >= min_occupancy]
        return float(coverage.max() - coverage.min()) if coverage.size else 0.0

    def cells(self, records: OutcomeRecords) -> np.ndarray:
        """Bin index of every record's statistic."""
        index = self.binning.locate(records.statistic(self.statistic_id))
        if (index < 0).any():
            raise StatisticOutOfRangeError(f"{int((index < 0).sum())} value(s) of {self.statistic_id!r} fall outside {self.binning.edges[0]}..{self.binning.edges[-1]}")
        return index

    def cell_forecasts(self, fallback: float) -> list[float]:
        """Forecast per bin, ``fallback`` where the bin is empty."""
        return [fallback if coverage is None else coverage for _, coverage in self.per_bin]


class CoverageTableBuilder:
    """Mergeable accumulator behind a ``ConditionalCoverageTable``."""

    def __init__(self, procedure_id: str, statistic_id: str, binning: Binning):
        self.procedure_id = procedure_id
        self.statistic_id = statistic_id
        self.binning = binning
        self.counts = np.zeros(binning.n_bins, dtype=np.int64)
        self.hits = np.zeros(binning.n_bins, dtype=np.int64)

    def add(self, records: OutcomeRecords, mask: "np.ndarray | None" = None) -> None:
        """Tabulate one batch, optionally restricted to rows where ``mask`` holds."""
        values = records.statistic(self.statistic_id)
        covered = records.outcome(self.procedure_id)
        if mask is not None:
            values, covered = values[mask], covered[mask]
        index = self.binning.locate(values)
        if (index < 0).any():
            raise StatisticOutOfRangeError(f"{int((index < 0).sum())} value(s) of {self.statistic_id!r} fall outside the binning")
        self.counts += np.bincount(index, minlength=self.binning.n_bins)
        self.hits += np.bincount(index[covered], minlength=self.binning.n_bins)

    def merge(self, other: "CoverageTableBuilder") -> "CoverageTableBuilder":
        """Return a builder holding the counts of both."""
        if (other.procedure_id, other.statistic_id, other.binning) != (self.procedure_id, self.statistic_id, self.binning):
            raise BinningMismatchError(f"Cannot merge {other.statistic_id!r}/{other.procedure_id!r} into {self.statistic_id!r}/{self.procedure_id!r}")
        merged = CoverageTableBuilder(self.procedure_id, self.statistic_id, self.binning)
        merged.counts = self.counts + other.counts
        merged.hits = self.hits + other.hits
        return merged

    def build(self) -> ConditionalCoverageTable:
        """Freeze the counts into a table."""
        if not self.counts.any():
            raise MisconfiguredExperimentError(f"Every bin of the {self.statistic_id!r} table is empty")
        return ConditionalCoverageTable(
            statistic_id=self.statistic_id,
            procedure_id=self.procedure_id,
            binning=self.binning,
            counts=tuple(self.counts.tolist()),
            hits=tuple(self.hits.tolist()),
        )


def build_table(records: "OutcomeRecords | Iterable", procedure_id: str, statistic_id: str, binning: Binning) -> ConditionalCoverageTable:
    """Tabulate coverage of ``procedure_id`` against ``statistic_id``."""
    builder = CoverageTableBuilder(procedure_id, statistic_id, binning)
    for batch in as_batches(records):
        builder.add(batch)
    return builder.build()


@dataclass(frozen=True)
class StratifiedCoverageTable:
    """One table per value of an integer-coded stratum statistic (e.g. nesting outcome)."""

    stratum_id: str
    tables: tuple[ConditionalCoverageTable, ...]

    def __post_init__(self):
        if not self.tables:
            raise ValueError("A stratified table needs at least one stratum")
        if len({(t.statistic_id, t.procedure_id) for t in self.tables}) != 1:
            raise ValueError("All strata must tabulate the same statistic and procedure")

    @property
    def statistic_id(self) -> str:
        """Conditioning statistic within each stratum."""
        return self.tables[0].statistic_id

    @property
    def procedure_id(self) -> str:
        """Outcome being forecast."""
        return self.tables[0].procedure_id

    @property
    def n(self) -> int:
        """Number of tabulated trials over all strata."""
        return sum(t.n for t in self.tables)

    def _offsets(self) -> np.ndarray:
        return np.cumsum([0] + [t.binning.n_bins for t in self.tables[:-1]])

    def cells(self, records: OutcomeRecords) -> np.ndarray:
        """Global cell index: stratum offset plus bin index within the stratum."""
        strata = records.statistic(self.stratum_id).astype(np.int64)
        if ((strata < 0) | (strata >= len(self.tables))).any():
            raise StatisticOutOfRangeError(f"Stratum codes of {self.stratum_id!r} outside 0..{len(self.tables) - 1}")
        cells = np.empty(len(strata), dtype=np.int64)
        for code, (table, offset) in enumerate(zip(self.tables, self._offsets())):
            rows = strata == code
            if rows.any():
                index = table.binning.locate(records.statistic(self.statistic_id)[rows])
                if (index < 0).any():
                    raise StatisticOutOfRangeError(f"Values of {self.statistic_id!r} fall outside stratum {code}'s binning")
                cells[rows] = offset + index
        return cells

    def cell_forecasts(self, fallback: float) -> list[float]:
        """Forecasts of every stratum's bins, concatenated."""
        return [q for table in self.tables for q in table.cell_forecasts(fallback)]

    def weighted_coverage(self) -> float:
        """Count-weighted mean coverage over all strata and bins."""
        return math.fsum(t.weighted_coverage() * t.n for t in self.tables if t.n) / self.n


class StratifiedTableBuilder:
    """Mergeable accumulator behind a ``StratifiedCoverageTable``."""

    def __init__(self, procedure_id: str, statistic_id: str, stratum_id: str, binnings: Sequence[Binning]):
        self.stratum_id = stratum_id
        self.builders = [CoverageTableBuilder(procedure_id, statistic_id, binning) for binning in binnings]

    def add(self, records: OutcomeRecords) -> None:
        """Tabulate one batch into its strata."""
        strata = records.statistic(self.stratum_id)
        for code, builder in enumerate(self.builders):
            builder.add(records, mask=strata == code)

    def merge(self, other: "StratifiedTableBuilder") -> "StratifiedTableBuilder":
        """Return a builder holding the counts of both."""
        merged = StratifiedTableBuilder.__new__(StratifiedTableBuilder)
        merged.stratum_id = self.stratum_id
        merged.builders = [a.merge(b) for a, b in zip(self.builders, other.builders)]
        return merged

    def build(self) -> StratifiedCoverageTable:
        """Freeze every stratum; a stratum with no trials keeps an all-empty table."""
        tables = []
        for builder in self.builders:
            tables.append(
                ConditionalCoverageTable(
                    statistic_id=builder.statistic_id,
                    procedure_id=builder.procedure_id,
                    binning=builder.binning,
                    counts=tuple(builder.counts.tolist()),
                    hits=tuple(builder.hits.tolist()),
                )
            )
        return StratifiedCoverageTable(self.stratum_id, tuple(tables))


@dataclass(frozen=True)
class TableLookup:
    """Result of looking a statistic value up in a conditional-coverage table."""

    forecast: Forecast
    bin_lower: float
    bin_upper: float
    count: int
    fallback: bool


def lookup_forecast(table: ConditionalCoverageTable, statistic_value: float, alpha: float = DEFAULT_ALPHA) -> TableLookup:
    """Per-bin coverage of the bin holding ``statistic_value``; an empty bin falls back to 1 - alpha."""
    index = int(table.binning.locate(statistic_value))
    if index < 0:
        raise StatisticOutOfRangeError(f"{statistic_value} is outside the {table.statistic_id!r} binning {table.binning.edges[0]}..{table.binning.edges[-1]}")
    count, coverage = table.per_bin[index]
    lower, upper = table.binning.bounds(index)
    if coverage is None:
        logger.warning(f"No estimate for {table.statistic_id}={statistic_value}; falling back to 1 - alpha = {1.0 - alpha}")
        return TableLookup(Forecast(1.0 - alpha), lower, upper, count, fallback=True)
    return TableLookup(Forecast(coverage), lower, upper, count, fallback=False)


@dataclass(frozen=True)
class ThetaFreenessReport:
    """Whether conditional coverage given a statistic looks the same across configurations."""

    statistic_id: str
    procedure_id: str
    max_cross_config_deviation: float
    tolerance: float
    is_theta_free: bool
    max_raw_range: float = 0.0
    n_configs: int = 0
    n_bins_compared: int = 0
    min_occupancy: int = MIN_BIN_OCCUPANCY


def theta_freeness(
    per_config_tables: Sequence[ConditionalCoverageTable],
    tolerance: float = THETA_FREE_TOLERANCE,
    min_occupancy: int = MIN_BIN_OCCUPANCY,
    allowance: float = NOISE_ALLOWANCE_SE,
) -> ThetaFreenessReport:
    """
    Compare per-configuration coverage curves bin by bin.

    Only bins holding at least ``min_occupancy`` trials in a configuration take
    part. A configuration's deviation from the pooled bin estimate counts only
    beyond ``allowance`` binomial standard errors; the largest remaining excess is
    compared with ``tolerance``. The literal spread of the estimates is reported
    as ``max_raw_range``.
    """
    if len(per_config_tables) < 2:
        raise MisconfiguredExperimentError(f"theta-freeness needs at least 2 configurations, got {len(per_config_tables)}")
    first = per_config_tables[0]
    for table in per_config_tables[1:]:
        if table.binning != first.binning or (table.statistic_id, table.procedure_id) != (first.statistic_id, first.procedure_id):
            raise BinningMismatchError(f"Tables for {first.statistic_id!r}/{first.procedure_id!r} do not share one binning")

    counts = np.array([t.counts for t in per_config_tables], dtype=float)
    hits = np.array([t.hits for t in per_config_tables], dtype=float)
    occupied = counts >= min_occupancy
    with np.errstate(invalid="ignore", divide="ignore"):
        coverage = hits / counts
        pooled = hits.sum(axis=0) / counts.sum(axis=0)
        standard_error = np.sqrt(pooled * (1.0 - pooled) / counts)

    compared = occupied.sum(axis=0) >= 2
    excess = np.where(occupied, np.abs(coverage - pooled) - allowance * standard_error, -np.inf)[:, compared]
    spread = np.where(occupied, coverage, np.nan)[:, compared]
    if not compared.any():
        logger.warning(f"No bin of {first.statistic_id!r} reaches {min_occupancy} trials in two configurations; nothing to compare")
        deviation, raw_range = 0.0, 0.0
    else:
        deviation = max(0.0, float(excess.max()))
        raw_range = float(np.nanmax(np.nanmax(spread, axis=0) - np.nanmin(spread, axis=0)))
    report = ThetaFreenessReport(
        statistic_id=first.statistic_id,
        procedure_id=first.procedure_id,
        max_cross_config_deviation=deviation,
        tolerance=tolerance,
        is_theta_free=deviation <= tolerance,
        max_raw_range=raw_range,
        n_configs=len(per_config_tables),
        n_bins_compared=int(compared.sum()),
        min_occupancy=min_occupancy,
    )
    logger.info(
        f"theta-freeness of {report.statistic_id!r} for {report.procedure_id!r}: deviation {deviation:.4f} "
        f"(raw range {raw_range:.4f}) over {report.n_bins_compared} bins -> {report.is_theta_free}"
    )
    return report


class ForecastKind(StrEnum):
    """Families of forecast rules."""

    CONSTANT_ONE = "constant_one"
    CONSTANT_LEVEL = "constant_level"
    CONSTANT_JOINT = "constant_joint"
    TABLE_LOOKUP = "table_lookup"
    ORACLE = "oracle"


@dataclass(frozen=True)
class ForecastRule:
    """
    Maps a trial's retained information to a forecast q in [0, 1].

    Every rule partitions trials into a few cells with one forecast each, which
    is what lets sweeps score it with an exact ``ScoreTally``.
    """

    kind: ForecastKind
    rule_id: str
    outcome_id: str
    value: "float | None" = None
    table: "ConditionalCoverageTable | StratifiedCoverageTable | None" = None
    fallback: float = 1.0 - DEFAULT_ALPHA

    @classmethod
    def constant_one(cls, outcome_id: str, rule_id: str = "constant_one") -> "ForecastRule":
        """Always assert coverage."""
        return cls(ForecastKind.CONSTANT_ONE, rule_id, outcome_id, value=1.0)

    @classmethod
    def constant_level(cls, alpha: float, outcome_id: str, rule_id: str = "constant_level") -> "ForecastRule":
        """Always forecast the nominal level 1 - alpha."""
        return cls(ForecastKind.CONSTANT_LEVEL, rule_id, outcome_id, value=1.0 - alpha, fallback=1.0 - alpha)

    @classmethod
    def constant_joint(cls, p_joint: float, outcome_id: str, rule_id: str = "constant_joint") -> "ForecastRule":
        """Always forecast a composite procedure's design-level coverage."""
        return cls(ForecastKind.CONSTANT_JOINT, rule_id, outcome_id, value=Forecast(p_joint).q, fallback=p_joint)

    @classmethod
    def table_lookup(cls, table: "ConditionalCoverageTable | StratifiedCoverageTable", fallback: float, rule_id: str) -> "ForecastRule":
        """Forecast the tabulated coverage of the trial's bin."""
        return cls(ForecastKind.TABLE_LOOKUP, rule_id, table.procedure_id, table=table, fallback=Forecast(fallback).q)

    @classmethod
    def oracle(cls, outcome_id: str, rule_id: str = "oracle") -> "ForecastRule":
        """Forecast z itself; only possible in simulation."""
        return cls(ForecastKind.ORACLE, rule_id, outcome_id)

    def cell_forecasts(self) -> list[float]:
        """Forecast value of each cell."""
        if self.kind is ForecastKind.TABLE_LOOKUP:
            return self.table.cell_forecasts(self.fallback)
        if self.kind is ForecastKind.ORACLE:
            return [0.0, 1.0]
        return [self.value]

    def cells(self, records: OutcomeRecords) -> np.ndarray:
        """Cell index of every record."""
        if self.kind is ForecastKind.TABLE_LOOKUP:
            return self.table.cells(records)
        if self.kind is ForecastKind.ORACLE:
            return records.outcome(self.outcome_id).astype(np.int64)
        return np.zeros(len(records), dtype=np.int64)

    def forecast(self, records: OutcomeRecords) -> np.ndarray:
        """Forecast for every record."""
        return np.asarray(self.cell_forecasts())[self.cells(records)]

    def new_tally(self) -> ScoreTally:
        """Empty score tally over this rule's cells."""
        return ScoreTally(self.cell_forecasts())


def recommend_forecast(
    report: ThetaFreenessReport,
    table: ConditionalCoverageTable,
    alpha: float,
    tolerance: "float | None" = None,
    rule_id: "str | None" = None,
) -> ForecastRule:
    """
    Rule of thumb for what to forecast after seeing an interval.

    If the statistic is theta-free and coverage moves with it, use the table;
    if coverage is flat, or the statistic is not theta-free, report 1 - alpha.
    Coverage spread counts only bins holding the report's ``min_occupancy`` trials.
    """
    if (report.statistic_id, report.procedure_id) != (table.statistic_id, table.procedure_id):
        raise ValueError(f"Report for {report.statistic_id!r}/{report.procedure_id!r} does not match table {table.statistic_id!r}/{table.procedure_id!r}")
    tolerance = report.tolerance if tolerance is None else tolerance
    spread = table.coverage_range(min_occupancy=report.min_occupancy)
    if report.is_theta_free and spread > tolerance:
        logger.info(f"{table.statistic_id!r} is theta-free and coverage varies by {spread:.3f}; using the look-up table")
        return ForecastRule.table_lookup(table, fallback=1.0 - alpha, rule_id=rule_id or f"{table.procedure_id}_{table.statistic_id}")
    reason = "coverage is flat" if report.is_theta_free else "statistic is not theta-free"
    logger.info(f"{table.statistic_id!r}: {reason}; defaulting to 1 - alpha = {1.0 - alpha}")
    return ForecastRule.constant_level(alpha, table.procedure_id, rule_id=rule_id or "constant_level")


@dataclass(frozen=True)
class RuleScore:
    """Pooled mean score of a forecast rule and the variance of its per-configuration means."""

    rule_id: str
    mean: float
    variance: float
    per_config_means: tuple[float, ...] = ()


@dataclass
class ScoreBoard:
    """Per-configuration score tallies for a set of forecast rules; mergeable."""

    rules: Sequence[ForecastRule]
    tallies: dict[tuple, dict[str, ScoreTally]] = field(default_factory=dict)

    def _tallies(self, key: tuple) -> dict[str, ScoreTally]:
        if key not in self.tallies:
            self.tallies[key] = {rule.rule_id: rule.new_tally() for rule in self.rules}
        return self.tallies[key]

    def add(self, records: OutcomeRecords, config_key: "tuple | None" = None) -> None:
        """Score one batch; rows are grouped by (theta, hull_width) unless ``config_key`` is given."""
        if config_key is not None:
            groups = [(config_key, None)]
        elif hasattr(records, "theta"):
            keys = np.stack([records.theta, records.hull_width], axis=1)
            groups = [((float(t), float(w)), (records.theta == t) & (records.hull_width == w)) for t, w in np.unique(keys, axis=0)]
        else:
            groups = [((), None)]
        columns = {rule.rule_id: (rule.cells(records), records.outcome(rule.outcome_id)) for rule in self.rules}
        for key, rows in groups:
            tallies = self._tallies(key)
            for rule_id, (cells, z) in columns.items():
                if rows is not None:
                    cells, z = cells[rows], z[rows]
                tallies[rule_id].add(cells, z)

    def merge(self, other: "ScoreBoard") -> "ScoreBoard":
        """Board holding both boards' configurations; shared configurations add up."""
        merged = ScoreBoard(self.rules)
        for board in (self, other):
            for key, tallies in board.tallies.items():
                target = merged._tallies(key)
                for rule_id, tally in tallies.items():
                    target[rule_id] = target[rule_id].merge(tally)
        return merged

    def config_means(self, rule: ScoringRuleKind) -> dict[tuple, dict[str, float]]:
        """Mean score per configuration and rule."""
        return {key: {rule_id: tally.mean(rule) for rule_id, tally in tallies.items()} for key, tallies in self.tallies.items()}

    def results(self, rule: ScoringRuleKind) -> list[RuleScore]:
        """Pooled mean and across-configuration variance per rule, in rule order."""
        if not self.tallies:
            raise MisconfiguredExperimentError("No records were scored")
        results = []
        for forecast_rule in self.rules:
            tallies = [t[forecast_rule.rule_id] for t in self.tallies.values()]
            pooled = tallies[0]
            for tally in tallies[1:]:
                pooled = pooled.merge(tally)
            means = tuple(t.mean(rule) for t in tallies)
            results.append(RuleScore(forecast_rule.rule_id, pooled.mean(rule), across_config_variance(means), means))
        return results


def evaluate_forecast_rules(records: "OutcomeRecords | Iterable", rules: Sequence[ForecastRule], rule: ScoringRuleKind) -> list[RuleScore]:
    """Score every rule on the records, pooled and per (theta, hull_width) configuration."""
    board = ScoreBoard(rules)
    for batch in as_batches(records):
        board.add(batch)
    return board.results(rule)


@dataclass(frozen=True)
class TConstancyReport:
    """
    Conditional coverage of the normal-model t interval.

    ``width_table`` tabulates coverage against the absolute width, pooled over
    designs; ``width_report`` says whether that curve survives a change of
    (mu, sigma). ``ancillary_table`` conditions on the studentized range, which
    carries no coverage information at all.
    """

    alpha: float
    critical_value: float
    marginal_coverage: float
    width_table: ConditionalCoverageTable
    width_report: ThetaFreenessReport
    ancillary_table: ConditionalCoverageTable
    ancillary_report: ThetaFreenessReport
    recommendation: ForecastRule
    n_degenerate: int

    @property
    def max_decile_deviation(self) -> float:
        """Largest distance between a studentized-range decile's coverage and the nominal level."""
        return float(np.nanmax(np.abs(self.ancillary_table.coverage_array() - (1.0 - self.alpha))))


def quantile_binning(values: np.ndarray, n_bins: int) -> Binning:
    """Bins at the empirical quantiles of ``values``; tied quantiles collapse."""
    return Binning(tuple(np.unique(np.quantile(values, np.linspace(0.0, 1.0, n_bins + 1))).tolist()))


def _pooled_table(per_design: Sequence[ConditionalCoverageTable]) -> ConditionalCoverageTable:
    first = per_design[0]
    return ConditionalCoverageTable(
        statistic_id=first.statistic_id,
        procedure_id=first.procedure_id,
        binning=first.binning,
        counts=tuple(int(c) for c in np.sum([t.counts for t in per_design], axis=0)),
        hits=tuple(int(h) for h in np.sum([t.hits for t in per_design], axis=0)),
    )


def t_interval_constancy(
    n: int = 5,
    alpha: float = 0.05,
    n_trials: int = 100_000,
    seed: int = 0,
    designs: Sequence[tuple[float, float]] = T_DESIGNS,
    n_bins: int = 10,
    tolerance: float = THETA_FREE_TOLERANCE,
) -> TConstancyReport:
    """
    Tabulate t-interval coverage by decile bins at several (mu, sigma) designs.

    Coverage given the width rises with s / sigma, so the width curve moves with
    sigma and the rule of thumb falls back to the nominal level. The studentized
    range is ancillary for (mu, sigma) and independent of the pivot, so its
    per-decile coverage stays at 1 - alpha.
    """
    if len(designs) < 2:
        raise MisconfiguredExperimentError(f"t-interval constancy needs at least 2 designs, got {len(designs)}")
    batches = [simulate_t_trials(n, alpha, n_trials, seed, mu=mu, sigma=sigma, config_index=i) for i, (mu, sigma) in enumerate(designs)]

    def per_design(statistic_id: str) -> list[ConditionalCoverageTable]:
        binning = quantile_binning(np.concatenate([b.statistic(statistic_id) for b in batches]), n_bins)
        return [build_table(b, T, statistic_id, binning) for b in batches]

    width_tables = per_design(STAT_WIDTH)
    ancillary_tables = per_design(STAT_STUDENTIZED_RANGE)
    width_table = _pooled_table(width_tables)
    width_report = theta_freeness(width_tables, tolerance=tolerance)
    return TConstancyReport(
        alpha=alpha,
        critical_value=t_critical(n - 1, alpha),
        marginal_coverage=width_table.marginal_coverage(),
        width_table=width_table,
        width_report=width_report,
        ancillary_table=_pooled_table(ancillary_tables),
        ancillary_report=theta_freeness(ancillary_tables, tolerance=tolerance),
        recommendation=recommend_forecast(width_report, width_table, alpha, tolerance),
        n_degenerate=sum(b.n_degenerate for b in batches),
    )
