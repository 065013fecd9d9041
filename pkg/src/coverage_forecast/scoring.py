import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from coverage_forecast._compat import StrEnum

import numpy as np

from coverage_forecast.exceptions import MisconfiguredExperimentError
from coverage_forecast.model import CoverageOutcome

logger = logging.getLogger(__name__)


class ScoringRuleKind(StrEnum):
    """Strictly proper scoring rules for Bernoulli outcomes."""

    BRIER = "brier"
    LOG = "log"


@dataclass(frozen=True, slots=True)
class Forecast:
    """Probability forecast q for a coverage event."""

    q: float

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"Forecast must lie in [0, 1], got {self.q}")

    def __float__(self) -> float:
        return float(self.q)


def _probability(value: "Forecast | float", name: str = "q") -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def _outcome(z: "CoverageOutcome | int") -> int:
    z = int(z)
    if z not in (0, 1):
        raise ValueError(f"Coverage outcome must be 0 or 1, got {z}")
    return z


def score(rule: ScoringRuleKind, q: "Forecast | float", z: "CoverageOutcome | int") -> float:
    """
    Loss S(q, z) of forecast q against outcome z.

    Brier is (z - q)^2. Log is -ln q when z = 1 and -ln(1 - q) when z = 0; a
    certain forecast that turns out wrong scores ``math.inf``.
    """
    rule = ScoringRuleKind(rule)
    q = _probability(q)
    z = _outcome(z)
    if rule is ScoringRuleKind.BRIER:
        return (z - q) ** 2
    p = q if z else 1.0 - q
    return math.inf if p == 0.0 else -math.log(p)


def score_array(rule: ScoringRuleKind, q: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorised ``score`` over matching arrays of forecasts and outcomes."""
    rule = ScoringRuleKind(rule)
    q = np.asarray(q, dtype=float)
    z = np.asarray(z, dtype=float)
    if rule is ScoringRuleKind.BRIER:
        return (z - q) ** 2
    with np.errstate(divide="ignore"):
        return -np.log(np.where(z == 1.0, q, 1.0 - q))


def expected_score(rule: ScoringRuleKind, q: "Forecast | float", p: float) -> float:
    """Pre-trial risk p * S(q, 1) + (1 - p) * S(q, 0); zero-weight terms are skipped."""
    q = _probability(q)
    p = _probability(p, "p")
    risk = 0.0
    if p > 0.0:
        risk += p * score(rule, q, 1)
    if p < 1.0:
        risk += (1.0 - p) * score(rule, q, 0)
    return risk


def brier_expected_score(q: float, p: float) -> float:
    """Closed form of the Brier risk, p(1 - q)^2 + (1 - p)q^2."""
    return p * (1.0 - q) ** 2 + (1.0 - p) * q**2


def optimal_constant_forecast(rule: ScoringRuleKind, p: float) -> Forecast:
    """
    Best constant forecast for a Bernoulli(p) coverage event.

    For a strictly proper rule the expected score is uniquely minimised at q = p,
    so the answer does not depend on ``rule``.
    """
    return Forecast(_probability(p, "p"))


def empirical_mean_score(rule: ScoringRuleKind, pairs: Iterable[tuple["Forecast | float", "CoverageOutcome | int"]]) -> tuple[float, float]:
    """Mean and population variance of per-pair losses."""
    pairs = list(pairs)
    if not pairs:
        raise MisconfiguredExperimentError("Cannot score an empty sequence of forecasts")
    q = np.array([_probability(forecast) for forecast, _ in pairs])
    z = np.array([_outcome(outcome) for _, outcome in pairs])
    losses = score_array(rule, q, z)
    if np.isinf(losses).any():
        logger.warning(f"{int(np.isinf(losses).sum())} infinite {rule} losses; mean score is infinite")
        return math.inf, math.inf
    mean = float(np.mean(losses))
    return mean, float(np.mean((losses - mean) ** 2))


def across_config_variance(means: Sequence[float]) -> float:
    """Population variance of per-configuration mean scores."""
    means = np.asarray(means, dtype=float)
    if means.size == 0:
        raise MisconfiguredExperimentError("No configuration means to summarise")
    if np.isinf(means).any():
        return math.inf
    return float(np.var(means))


class ScoreTally:
    """
    Mergeable score accumulator for forecasts drawn from a fixed set of values.

    Every forecast rule used by the sweep maps a trial to one of a few cells
    (a bin, a nesting class, a constant), each with its own forecast value. The
    tally counts (cell, outcome) pairs, so merges are exact integer additions and
    the result does not depend on chunking or merge order.
    """

    def __init__(self, forecasts: Sequence[float]):
        self.forecasts = np.array([_probability(q) for q in forecasts], dtype=float)
        self.counts = np.zeros((len(self.forecasts), 2), dtype=np.int64)

    @property
    def n(self) -> int:
        """Number of scored trials."""
        return int(self.counts.sum())

    def add(self, cells: np.ndarray, z: np.ndarray) -> None:
        """Record one outcome per trial against the trial's forecast cell."""
        keys = 2 * np.asarray(cells, dtype=np.int64) + np.asarray(z, dtype=np.int64)
        self.counts += np.bincount(keys, minlength=self.counts.size).reshape(self.counts.shape)

    def merge(self, other: "ScoreTally") -> "ScoreTally":
        """Return a tally holding the counts of both."""
        if not np.array_equal(self.forecasts, other.forecasts):
            raise ValueError("Cannot merge tallies with different forecast cells")
        merged = ScoreTally(self.forecasts)
        merged.counts = self.counts + other.counts
        return merged

    def _losses(self, rule: ScoringRuleKind) -> tuple[np.ndarray, np.ndarray]:
        occupied = self.counts > 0
        q = np.broadcast_to(self.forecasts[:, None], self.counts.shape)[occupied]
        z = np.broadcast_to(np.array([0, 1]), self.counts.shape)[occupied]
        return score_array(rule, q, z), self.counts[occupied]

    def mean(self, rule: ScoringRuleKind) -> float:
        """Mean loss over all tallied trials."""
        if self.n == 0:
            raise MisconfiguredExperimentError("Cannot score an empty tally")
        losses, counts = self._losses(rule)
        if np.isinf(losses).any():
            logger.warning(f"Infinite {rule} loss in tally; mean score is infinite")
            return math.inf
        return math.fsum((losses * counts).tolist()) / self.n

    def variance(self, rule: ScoringRuleKind) -> float:
        """Population variance of the per-trial losses."""
        mean = self.mean(rule)
        if math.isinf(mean):
            return math.inf
        losses, counts = self._losses(rule)
        return math.fsum((counts * (losses - mean) ** 2).tolist()) / self.n
