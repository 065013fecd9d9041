"""The three-cup shell game: stay/switch payouts, exact win probabilities and cup-win forecasts."""

import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass
from coverage_forecast._compat import StrEnum
from fractions import Fraction

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from coverage_forecast.model import Interval
from coverage_forecast.scoring import ScoreTally, ScoringRuleKind
from coverage_forecast.simulation import STREAM_MONTY, trial_generator

logger = logging.getLogger(__name__)

N_CUPS = 3
MIN_PRIZE = 10.0


class Strategy(StrEnum):
    """What the player does once the host has removed a cup."""

    STAY = "stay"
    SWITCH = "switch"


class GameConfig(BaseModel):
    """Stakes of one game: the hidden amount, the buy-in and the share of the prize lost on a miss."""

    model_config = ConfigDict(frozen=True)

    prize_v: float = Field(ge=MIN_PRIZE)
    buy_in: float = 5.0
    loss_fraction: float = Field(default=0.5, ge=0.0)

    def payout(self, won: bool) -> float:
        """Net dollars for one game."""
        return (self.prize_v if won else -self.loss_fraction * self.prize_v) - self.buy_in


@dataclass(frozen=True)
class Deal:
    """One game: where the prize is, the player's first pick and the cup the host removed."""

    winning_cup: int
    pick: int
    removed: int

    def __post_init__(self):
        if self.removed in (self.pick, self.winning_cup):
            raise ValueError(f"Host may not remove cup {self.removed}: pick={self.pick}, winning={self.winning_cup}")

    def final_cup(self, strategy: Strategy) -> int:
        """Cup the player ends up holding."""
        if Strategy(strategy) is Strategy.STAY:
            return self.pick
        return N_CUPS - self.pick - self.removed

    def won(self, strategy: Strategy) -> bool:
        """Whether ``strategy`` wins this deal."""
        return self.final_cup(strategy) == self.winning_cup


def host_options(winning_cup: int, pick: int) -> list[int]:
    """Cups the host may remove: neither the pick nor the winner."""
    return [cup for cup in range(N_CUPS) if cup not in (winning_cup, pick)]


def deal_game(rng: np.random.Generator) -> Deal:
    """Hide the prize, let the player pick, and let the host remove a losing cup uniformly."""
    winning_cup, pick, removed = deal_games(rng, 1)
    return Deal(int(winning_cup[0]), int(pick[0]), int(removed[0]))


def play_game(rng: np.random.Generator, config: GameConfig, strategy: Strategy) -> float:
    """Play one game and return the player's net payout."""
    return config.payout(deal_game(rng).won(strategy))


def enumerate_deals() -> Iterator[tuple[Deal, Fraction]]:
    """Every (winning cup, pick, host choice) with its exact probability."""
    for winning_cup in range(N_CUPS):
        for pick in range(N_CUPS):
            options = host_options(winning_cup, pick)
            for removed in options:
                yield Deal(winning_cup, pick, removed), Fraction(1, N_CUPS * N_CUPS * len(options))


def win_probability_exact(strategy: Strategy) -> Fraction:
    """Win probability of ``strategy`` by exhaustive enumeration."""
    return sum((weight for deal, weight in enumerate_deals() if deal.won(strategy)), Fraction(0))


def expected_payout(config: GameConfig, strategy: Strategy) -> float:
    """
    Analytic expected payout.

    With the default stakes staying is worth -5 whatever the prize, while
    switching is worth v/2 - 5.
    """
    p = win_probability_exact(strategy)
    return float(p * Fraction(config.prize_v) - (1 - p) * Fraction(config.loss_fraction) * Fraction(config.prize_v) - Fraction(config.buy_in))


def deal_games(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Winning cups, picks and removed cups for ``n`` games."""
    cups = rng.integers(0, N_CUPS, size=(n, 2))
    coin = rng.integers(0, 2, size=n)
    winning_cup, pick = cups[:, 0], cups[:, 1]
    # prize under the pick: either other cup; otherwise the only losing cup left
    removed = np.where(winning_cup == pick, (pick + 1 + coin) % N_CUPS, N_CUPS - pick - winning_cup)
    return winning_cup, pick, removed


def range_labels(rng: np.random.Generator, config: GameConfig, winning_cup: int) -> tuple[Interval, ...]:
    """
    Disjoint dollar ranges written under the cups; only the winning cup's range holds v.

    Labels are narrative only and never feed back into a game.
    """
    step = config.prize_v / 4.0
    width = 0.9 * step
    offset = float(rng.random()) * width
    slot = int(rng.integers(0, N_CUPS))
    start = config.prize_v - offset - slot * step
    blocks = [Interval(start + k * step, start + k * step + width) for k in range(N_CUPS)]
    others = [blocks[k] for k in rng.permutation([k for k in range(N_CUPS) if k != slot])]
    labels = []
    for cup in range(N_CUPS):
        labels.append(blocks[slot] if cup == winning_cup else others.pop())
    return tuple(labels)


@dataclass(frozen=True)
class PayoutEstimate:
    """Monte Carlo mean payout with its standard error."""

    mean: float
    standard_error: float
    n: int


def simulate_mean_payout(config: GameConfig, strategy: Strategy, n: PositiveInt, seed: int) -> PayoutEstimate:
    """Mean payout of ``n`` independent games."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    winning_cup, pick, removed = deal_games(trial_generator(seed, 0, STREAM_MONTY), n)
    final = pick if Strategy(strategy) is Strategy.STAY else N_CUPS - pick - removed
    won = final == winning_cup
    payouts = np.where(won, config.prize_v, -config.loss_fraction * config.prize_v) - config.buy_in
    mean = float(payouts.mean())
    standard_error = float(payouts.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    logger.debug(f"{strategy} at v={config.prize_v}: mean payout {mean:.4f} +/- {standard_error:.4f} over {n} games")
    return PayoutEstimate(mean, standard_error, n)


@dataclass(frozen=True)
class CupForecastScore:
    """Mean score of a constant forecast of one cup's win indicator."""

    forecast_id: str
    cup: Strategy
    q: float
    mean: float


CUP_FORECASTS = (
    ("constant_one", Strategy.STAY, 1.0),
    ("stay_one_third", Strategy.STAY, 1.0 / 3.0),
    ("switch_two_thirds", Strategy.SWITCH, 2.0 / 3.0),
)


def score_cup_forecasts(n: int, seed: int, rule: ScoringRuleKind = ScoringRuleKind.BRIER) -> list[CupForecastScore]:
    """Score "my cup wins" against the design-level win probabilities of the stay and switch cups."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    winning_cup, pick, removed = deal_games(trial_generator(seed, 0, STREAM_MONTY), n)
    wins = {
        Strategy.STAY: (pick == winning_cup).astype(np.int64),
        Strategy.SWITCH: ((N_CUPS - pick - removed) == winning_cup).astype(np.int64),
    }
    scores = []
    for forecast_id, cup, q in CUP_FORECASTS:
        tally = ScoreTally([q])
        tally.add(np.zeros(n, dtype=np.int64), wins[cup])
        scores.append(CupForecastScore(forecast_id, cup, q, tally.mean(rule)))
    return scores
