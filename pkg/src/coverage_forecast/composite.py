"""The UMP + SD composite: nesting, nesting-conditional coverage, gap probability and its forecasts."""

import logging
import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from coverage_forecast.constants import BOTH, DEFAULT_BINS_OUTER, EITHER, SD, STAT_MAX_WIDTH, STAT_NESTING, UMP
from coverage_forecast.conditioning import (
    Binning,
    CoverageTableBuilder,
    ForecastRule,
    RuleScore,
    ScoreBoard,
    StratifiedTableBuilder,
)
from coverage_forecast.exceptions import MisconfiguredExperimentError, ProcedureError
from coverage_forecast.model import CoverageOutcome, Interval, TrialRecord
from coverage_forecast.procedures import relative_width
from coverage_forecast.scoring import ScoringRuleKind
from coverage_forecast.simulation import CoverageTally, OutcomeRecords, as_batches

logger = logging.getLogger(__name__)

MIDPOINT_TOLERANCE = 1e-9
NESTING_BINNING = Binning.uniform(0.0, 1.0, 2)


class NestingOutcome(IntEnum):
    """Which of the two intervals sits inside the other; stored as the ``nesting`` statistic."""

    UMP_INSIDE_SD = 0
    SD_INSIDE_UMP = 1


def classify_nesting(ump: Interval, sd: Interval) -> NestingOutcome:
    """
    Decide the nesting direction of a UMP/SD pair.

    Both intervals are centred on the sample mean, so nesting reduces to comparing
    widths. Equal widths count as UMP inside SD.
    """
    scale = max(1.0, abs(ump.midpoint), abs(sd.midpoint))
    if not math.isclose(ump.midpoint, sd.midpoint, rel_tol=0.0, abs_tol=MIDPOINT_TOLERANCE * scale):
        raise ProcedureError(f"UMP {ump} and SD {sd} do not share a midpoint")
    if sd.width() < ump.width():
        return NestingOutcome.SD_INSIDE_UMP
    return NestingOutcome.UMP_INSIDE_SD


@dataclass(frozen=True)
class CompositeRecord:
    """A trial viewed through the UMP + SD composite."""

    trial: TrialRecord
    nesting: NestingOutcome
    outer_relative_width: float
    either_covered: CoverageOutcome
    both_covered: CoverageOutcome

    def __post_init__(self):
        if self.both_covered > self.either_covered:
            raise ProcedureError("Both intervals cannot cover while neither does")
        if not 0.0 <= self.outer_relative_width <= 1.0:
            raise ValueError(f"Outer relative width must lie in [0, 1], got {self.outer_relative_width}")

    @classmethod
    def from_trial(cls, trial: TrialRecord) -> "CompositeRecord":
        """Derive the composite view of a trial carrying both UMP and SD intervals."""
        ump, sd = trial.intervals[UMP], trial.intervals[SD]
        nesting = classify_nesting(ump, sd)
        outer = ump if nesting is NestingOutcome.SD_INSIDE_UMP else sd
        ump_z, sd_z = trial.outcomes[UMP], trial.outcomes[SD]
        return cls(
            trial=trial,
            nesting=nesting,
            outer_relative_width=relative_width(outer, trial.hull_width),
            either_covered=CoverageOutcome(max(ump_z, sd_z)),
            both_covered=CoverageOutcome(min(ump_z, sd_z)),
        )


def composite_records(records: Iterable[TrialRecord]) -> Iterator[CompositeRecord]:
    """Composite view of every trial."""
    for trial in records:
        yield CompositeRecord.from_trial(trial)


def nesting_conditional_coverage(records: "OutcomeRecords | Iterable", outcome: NestingOutcome) -> float:
    """P(either interval covers | nesting direction)."""
    outcome = NestingOutcome(outcome)
    n, hits = 0, 0
    for batch in as_batches(records):
        rows = batch.statistic(STAT_NESTING) == outcome
        n += int(np.count_nonzero(rows))
        hits += int(np.count_nonzero(batch.outcome(EITHER)[rows]))
    if n == 0:
        raise MisconfiguredExperimentError(f"No records with nesting outcome {outcome.name}")
    return hits / n


@dataclass(frozen=True)
class GapProbabilities:
    """
    Counts behind P(outer covers and inner misses), split by nesting direction.

    The directions are joint probabilities, so they add up to the pooled gap,
    which in turn equals P(either) - P(both).
    """

    n: int
    sd_inside_ump_hits: int
    ump_inside_sd_hits: int
    either_hits: int
    both_hits: int

    @property
    def sd_inside_ump(self) -> float:
        """P(SD inside UMP, UMP covers, SD misses)."""
        return self.sd_inside_ump_hits / self.n

    @property
    def ump_inside_sd(self) -> float:
        """P(UMP inside SD, SD covers, UMP misses)."""
        return self.ump_inside_sd_hits / self.n

    @property
    def pooled(self) -> float:
        """P(exactly one of the two covers)."""
        return (self.sd_inside_ump_hits + self.ump_inside_sd_hits) / self.n

    @property
    def either(self) -> float:
        """P(either covers)."""
        return self.either_hits / self.n

    @property
    def both(self) -> float:
        """P(both cover)."""
        return self.both_hits / self.n

    @property
    def identity_error(self) -> float:
        """|(either - both) - pooled gap|; zero unless a nesting classification is wrong."""
        return abs(self.either_hits - self.both_hits - self.sd_inside_ump_hits - self.ump_inside_sd_hits) / self.n


def gap_probability(records: "OutcomeRecords | Iterable") -> GapProbabilities:
    """Probability that the outer interval covers while the inner one misses."""
    n = sd_inside = ump_inside = either = both = 0
    for batch in as_batches(records):
        sd_nested = batch.statistic(STAT_NESTING) == NestingOutcome.SD_INSIDE_UMP
        ump_z, sd_z = batch.outcome(UMP), batch.outcome(SD)
        n += len(batch)
        sd_inside += int(np.count_nonzero(sd_nested & ump_z & ~sd_z))
        ump_inside += int(np.count_nonzero(~sd_nested & sd_z & ~ump_z))
        either += int(np.count_nonzero(batch.outcome(EITHER)))
        both += int(np.count_nonzero(batch.outcome(BOTH)))
    if n == 0:
        raise MisconfiguredExperimentError("No records to compute a gap probability from")
    return GapProbabilities(n, sd_inside, ump_inside, either, both)


class CompositeTrainer:
    """Mergeable training-pass accumulator for the composite forecasts."""

    def __init__(self, bins_outer: int = DEFAULT_BINS_OUTER):
        self.bins_outer = bins_outer
        self.coverage = CoverageTally((EITHER, BOTH))
        self.nesting = CoverageTableBuilder(EITHER, STAT_NESTING, NESTING_BINNING)
        outer = Binning.uniform(0.0, 0.5, bins_outer)
        self.max_width = StratifiedTableBuilder(EITHER, STAT_MAX_WIDTH, STAT_NESTING, [outer] * len(NestingOutcome))

    def add(self, records: OutcomeRecords) -> None:
        """Tabulate one training batch."""
        self.coverage.add(records)
        self.nesting.add(records)
        self.max_width.add(records)

    def merge(self, other: "CompositeTrainer") -> "CompositeTrainer":
        """Return a trainer holding the counts of both."""
        merged = CompositeTrainer(self.bins_outer)
        merged.coverage = self.coverage.merge(other.coverage)
        merged.nesting = self.nesting.merge(other.nesting)
        merged.max_width = self.max_width.merge(other.max_width)
        return merged

    @property
    def p_joint(self) -> float:
        """Training estimate of P(either covers)."""
        return self.coverage.proportions()[EITHER]

    def rules(self) -> list[ForecastRule]:
        """Constant 1, constant p_joint, nesting-conditional and max-width-conditional forecasts of EITHER."""
        p_joint = self.p_joint
        logger.info(f"Training p_joint = {p_joint:.4f}")
        return [
            ForecastRule.constant_one(EITHER),
            ForecastRule.constant_joint(p_joint, EITHER),
            ForecastRule.table_lookup(self.nesting.build(), fallback=p_joint, rule_id="nesting"),
            ForecastRule.table_lookup(self.max_width.build(), fallback=p_joint, rule_id="max_width"),
        ]


def train_composite(records: "OutcomeRecords | Iterable", bins_outer: int = DEFAULT_BINS_OUTER) -> CompositeTrainer:
    """Run the training pass over ``records``."""
    trainer = CompositeTrainer(bins_outer)
    for batch in as_batches(records):
        trainer.add(batch)
    return trainer


def evaluate_composite_forecasts(
    records: "OutcomeRecords | Iterable",
    rule: ScoringRuleKind,
    training: "OutcomeRecords | Iterable | None" = None,
    bins_outer: int = DEFAULT_BINS_OUTER,
) -> list[RuleScore]:
    """
    Score the composite forecasts against the either-covers outcome.

    Tables are built from ``training``; without it they are built in-sample from
    ``records``.
    """
    batches = as_batches(records)
    trainer = train_composite(batches if training is None else training, bins_outer)
    board = ScoreBoard(trainer.rules())
    for batch in batches:
        board.add(batch)
    return board.results(rule)
