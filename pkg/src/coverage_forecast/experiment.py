"""
Submarine sweep orchestration.

A run makes two passes over the sweep under the same seed. The training pass
draws from one RNG stream and builds coverage tallies, conditional-coverage
tables and the composite training tables per configuration. The evaluation pass
draws from an independent stream and scores the forecast rules built from the
pooled training tables. Both passes fan out over configurations and merge in
configuration order.
"""

import logging
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from coverage_forecast.composite import NESTING_BINNING, CompositeTrainer, GapProbabilities, NestingOutcome, gap_probability
from coverage_forecast.conditioning import (
    Binning,
    ConditionalCoverageTable,
    CoverageTableBuilder,
    ForecastRule,
    RuleScore,
    ScoreBoard,
    StratifiedCoverageTable,
    ThetaFreenessReport,
    lookup_forecast,
    recommend_forecast,
    theta_freeness,
)
from coverage_forecast.config import RunConfig
from coverage_forecast.constants import BOTH, EITHER, NP, SD, STAT_D, STAT_NESTING, STAT_W, STAT_WIDTH, UMP
from coverage_forecast.oracles import bin_average, d_density, np_coverage_given_d, ump_coverage_given_w, w_density
from coverage_forecast.simulation import (
    STREAM_EVALUATE,
    STREAM_TRAIN,
    ConfigSummary,
    CoverageTally,
    SweepResult,
    iter_config_batches,
    map_configs,
)

logger = logging.getLogger(__name__)

TABLE_NP_D = (STAT_D, NP)
TABLE_UMP_W = (STAT_W, UMP)
TABLE_NP_WIDTH = (STAT_WIDTH, NP)
TABLE_NESTING = (STAT_NESTING, EITHER)


def table_binnings(config: RunConfig) -> dict[tuple[str, str], Binning]:
    """Binning of every tabulated (statistic, outcome) pair."""
    return {
        TABLE_NP_D: Binning.uniform(0.0, 1.0, config.bins_d),
        TABLE_UMP_W: Binning.uniform(0.0, 0.5, config.bins_w),
        TABLE_NP_WIDTH: Binning.uniform(0.0, max(config.hull_width_grid), config.bins_d),
        TABLE_NESTING: NESTING_BINNING,
    }


def simulated_procedures(config: RunConfig) -> list[str]:
    """Requested procedures plus the ones the tables and the composite need."""
    return list(dict.fromkeys([*config.procedures, NP, UMP, SD]))


def outcome_ids(config: RunConfig) -> list[str]:
    """Outcomes summarised per configuration."""
    return [*config.procedures, EITHER, BOTH]


@dataclass
class TrainingPass:
    """Everything the training pass accumulates for one configuration (or the pooled sweep)."""

    coverage: CoverageTally
    tables: dict[tuple[str, str], CoverageTableBuilder]
    composite: CompositeTrainer
    gap: "GapProbabilities | None" = None

    def merge(self, other: "TrainingPass") -> "TrainingPass":
        """Pool two passes."""
        gap = None
        if self.gap is not None and other.gap is not None:
            gap = GapProbabilities(*(a + b for a, b in zip(_gap_counts(self.gap), _gap_counts(other.gap))))
        return TrainingPass(
            coverage=self.coverage.merge(other.coverage),
            tables={key: builder.merge(other.tables[key]) for key, builder in self.tables.items()},
            composite=self.composite.merge(other.composite),
            gap=gap,
        )


def _gap_counts(gap: GapProbabilities) -> tuple[int, ...]:
    return gap.n, gap.sd_inside_ump_hits, gap.ump_inside_sd_hits, gap.either_hits, gap.both_hits


def train_config(config: RunConfig, config_index: int) -> TrainingPass:
    """Training pass over one configuration."""
    training = TrainingPass(
        coverage=CoverageTally(outcome_ids(config)),
        tables={key: CoverageTableBuilder(key[1], key[0], binning) for key, binning in table_binnings(config).items()},
        composite=CompositeTrainer(config.bins_outer),
    )
    batches = list(iter_config_batches(config, config_index, simulated_procedures(config), STREAM_TRAIN))
    for batch in batches:
        training.coverage.add(batch)
        training.composite.add(batch)
        for builder in training.tables.values():
            builder.add(batch)
    training.gap = gap_probability(batches)
    return training


def evaluate_config(config: RunConfig, config_index: int, boards: Mapping[str, ScoreBoard]) -> dict[str, ScoreBoard]:
    """Evaluation pass over one configuration; returns fresh boards holding only this configuration."""
    design = config.designs()[config_index]
    key = (design.theta, design.hull_width)
    local = {name: ScoreBoard(board.rules) for name, board in boards.items()}
    for batch in iter_config_batches(config, config_index, simulated_procedures(config), STREAM_EVALUATE):
        for board in local.values():
            board.add(batch, config_key=key)
    return local


@dataclass(frozen=True)
class CompositeSummary:
    """Composite coverage quantities from the training pass."""

    p_joint: float
    p_both: float
    coverage_sd_inside_ump: float
    coverage_ump_inside_sd: float
    gap: GapProbabilities


@dataclass(frozen=True)
class SubmarineReport:
    """Everything a submarine run produces."""

    config: RunConfig
    sweep: SweepResult
    tables: Mapping[tuple[str, str], ConditionalCoverageTable]
    max_width_table: StratifiedCoverageTable
    freeness: Sequence[ThetaFreenessReport]
    single: Sequence[RuleScore]
    paired: Sequence[RuleScore]
    composite: CompositeSummary
    curve_deviation: Mapping[str, float] = field(default_factory=dict)
    tower_error: float = 0.0
    elapsed_seconds: float = 0.0

    def single_score(self, rule_id: str) -> RuleScore:
        """Row of the single-procedure score table."""
        return next(score for score in self.single if score.rule_id == rule_id)

    def paired_score(self, rule_id: str) -> RuleScore:
        """Row of the UMP + SD score table."""
        return next(score for score in self.paired if score.rule_id == rule_id)


def max_curve_deviation(table: ConditionalCoverageTable, curve, density, min_occupancy: int) -> float:
    """Largest distance between occupied bins and the bin-averaged analytic curve."""
    deviations = []
    for index, (count, coverage) in enumerate(table.per_bin):
        if coverage is not None and count >= min_occupancy:
            lower, upper = table.binning.bounds(index)
            deviations.append(abs(coverage - bin_average(curve, density, lower, upper)))
    return max(deviations, default=0.0)


def _summaries(config: RunConfig, per_config: Sequence[TrainingPass], boards: Mapping[str, ScoreBoard]) -> SweepResult:
    means = {name: board.config_means(config.rule) for name, board in boards.items()}
    summaries = {}
    for design, training in zip(config.designs(), per_config):
        key = (design.theta, design.hull_width)
        scores = {(f"{name}.{rule_id}", str(config.rule)): value for name, by_config in means.items() for rule_id, value in by_config[key].items()}
        summaries[key] = ConfigSummary(design.theta, design.hull_width, training.coverage.n, training.coverage.proportions(), scores)
    pooled_coverage = per_config[0].coverage
    for training in per_config[1:]:
        pooled_coverage = pooled_coverage.merge(training.coverage)
    pooled_scores = {(f"{name}.{score.rule_id}", str(config.rule)): score.mean for name, board in boards.items() for score in board.results(config.rule)}
    pooled = ConfigSummary(float("nan"), float("nan"), pooled_coverage.n, pooled_coverage.proportions(), pooled_scores)
    return SweepResult(per_config=summaries, pooled=pooled)


def run_submarine(config: RunConfig, include_oracle: bool = False) -> SubmarineReport:
    """Run both passes of the submarine sweep and assemble the report."""
    started = time.perf_counter()
    n_configs = len(config.designs())
    logger.info(f"Submarine sweep: {n_configs} configurations x {config.n_trials} trials, seed {config.seed}, {config.threads} thread(s)")

    per_config = map_configs(config, lambda i: train_config(config, i), config.threads)
    pooled = per_config[0]
    for training in per_config[1:]:
        pooled = pooled.merge(training)
    logger.info(f"Training pass done: {pooled.coverage.n} trials")

    tables = {key: builder.build() for key, builder in pooled.tables.items()}
    freeness = [
        theta_freeness([t.tables[key].build() for t in per_config], config.theta_free_tolerance, config.min_occupancy)
        for key in tables
    ] if n_configs > 1 else []
    report_by_key = {(r.statistic_id, r.procedure_id): r for r in freeness}

    def table_rule(key: tuple[str, str], rule_id: str) -> ForecastRule:
        if key in report_by_key:
            return recommend_forecast(report_by_key[key], tables[key], config.alpha, rule_id=rule_id)
        logger.warning(f"Single configuration: using the {key} table without a theta-freeness check")
        return ForecastRule.table_lookup(tables[key], fallback=config.level, rule_id=rule_id)

    single_rules = [
        ForecastRule.constant_one(NP),
        ForecastRule.constant_level(config.alpha, NP),
        table_rule(TABLE_NP_D, "np_width"),
        table_rule(TABLE_UMP_W, "ump_width"),
    ]
    if include_oracle:
        single_rules.append(ForecastRule.oracle(NP))
    boards = {"single": ScoreBoard(single_rules), "paired": ScoreBoard(pooled.composite.rules())}

    evaluated = map_configs(config, lambda i: evaluate_config(config, i, boards), config.threads)
    for local in evaluated:
        boards = {name: boards[name].merge(board) for name, board in local.items()}
    logger.info("Evaluation pass done")

    np_table, ump_table = tables[TABLE_NP_D], tables[TABLE_UMP_W]
    curve_deviation = {
        "np": max_curve_deviation(np_table, np_coverage_given_d, d_density, config.min_occupancy),
        "ump": max_curve_deviation(ump_table, ump_coverage_given_w, w_density, config.min_occupancy),
        "d_quarter": lookup_forecast(np_table, 0.25, config.alpha).forecast.q,
    }
    tower_error = max(abs(t.weighted_coverage() - t.marginal_coverage()) for t in tables.values())

    composite_coverage = pooled.composite.nesting.build()
    nesting_coverage = dict(zip(NestingOutcome, (coverage for _, coverage in composite_coverage.per_bin)))
    composite = CompositeSummary(
        p_joint=pooled.composite.p_joint,
        p_both=pooled.coverage.proportions()[BOTH],
        coverage_sd_inside_ump=_or_nan(nesting_coverage[NestingOutcome.SD_INSIDE_UMP]),
        coverage_ump_inside_sd=_or_nan(nesting_coverage[NestingOutcome.UMP_INSIDE_SD]),
        gap=pooled.gap,
    )
    elapsed = time.perf_counter() - started
    logger.info(f"Submarine sweep finished in {elapsed:.1f}s")
    return SubmarineReport(
        config=config,
        sweep=_summaries(config, per_config, boards),
        tables=tables,
        max_width_table=pooled.composite.max_width.build(),
        freeness=freeness,
        single=boards["single"].results(config.rule),
        paired=boards["paired"].results(config.rule),
        composite=composite,
        curve_deviation=curve_deviation,
        tower_error=tower_error,
        elapsed_seconds=elapsed,
    )


def _or_nan(value: "float | None") -> float:
    return float("nan") if value is None else value


def marginal_deviation(report: SubmarineReport, procedure_id: str, target: float) -> float:
    """Largest per-configuration distance of a procedure's coverage from ``target``."""
    return float(np.max([abs(s.coverage_by_procedure[procedure_id] - target) for s in report.sweep.per_config.values()]))
