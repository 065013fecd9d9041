from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from coverage_forecast.monty import (
    N_CUPS,
    Deal,
    GameConfig,
    Strategy,
    deal_game,
    deal_games,
    enumerate_deals,
    expected_payout,
    host_options,
    play_game,
    range_labels,
    score_cup_forecasts,
    simulate_mean_payout,
    win_probability_exact,
)
from coverage_forecast.scoring import ScoringRuleKind


def test_exact_win_probabilities():
    assert win_probability_exact(Strategy.STAY) == Fraction(1, 3)
    assert win_probability_exact(Strategy.SWITCH) == Fraction(2, 3)


def test_enumeration_is_a_distribution():
    assert sum(weight for _, weight in enumerate_deals()) == 1


@pytest.mark.parametrize(
    "prize_v, strategy, expected",
    [(10.0, Strategy.STAY, -5.0), (10.0, Strategy.SWITCH, 0.0), (50.0, Strategy.SWITCH, 20.0), (50.0, Strategy.STAY, -5.0)],
)
def test_expected_payout(prize_v, strategy, expected):
    assert expected_payout(GameConfig(prize_v=prize_v), strategy) == pytest.approx(expected, abs=1e-12)


def test_payout():
    config = GameConfig(prize_v=50.0)
    assert config.payout(True) == 45.0
    assert config.payout(False) == -30.0


def test_prize_below_minimum_is_rejected():
    with pytest.raises(ValidationError):
        GameConfig(prize_v=9.0)


def test_host_never_removes_pick_or_prize():
    assert host_options(0, 0) == [1, 2]
    assert host_options(0, 2) == [1]
    with pytest.raises(ValueError):
        Deal(winning_cup=1, pick=0, removed=1)


@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=50)
def test_dealt_games_are_valid(seed):
    rng = np.random.default_rng(seed)
    deal = deal_game(rng)
    assert deal.removed not in (deal.pick, deal.winning_cup)
    # exactly one of stay and switch wins
    assert deal.won(Strategy.STAY) != deal.won(Strategy.SWITCH)
    winning_cup, pick, removed = deal_games(rng, 200)
    assert np.all((removed != pick) & (removed != winning_cup))
    assert np.all((removed >= 0) & (removed < N_CUPS))


def test_play_game_pays_one_of_two_amounts():
    config = GameConfig(prize_v=10.0)
    rng = np.random.default_rng(1)
    assert {play_game(rng, config, Strategy.SWITCH) for _ in range(50)} <= {5.0, -10.0}


@pytest.mark.parametrize("strategy", list(Strategy))
def test_simulated_payout_matches_analytic(strategy):
    config = GameConfig(prize_v=10.0)
    estimate = simulate_mean_payout(config, strategy, 200_000, seed=4)
    assert abs(estimate.mean - expected_payout(config, strategy)) <= 4.0 * estimate.standard_error


def test_single_deal_follows_the_batch_rule():
    config = GameConfig(prize_v=20.0)
    for seed in range(20):
        winning_cup, pick, removed = (int(a[0]) for a in deal_games(np.random.default_rng(seed), 1))
        deal = deal_game(np.random.default_rng(seed))
        assert (deal.winning_cup, deal.pick, deal.removed) == (winning_cup, pick, removed)
        won = N_CUPS - pick - removed == winning_cup
        assert play_game(np.random.default_rng(seed), config, Strategy.SWITCH) == config.payout(won)


def test_single_game_has_no_standard_error():
    assert simulate_mean_payout(GameConfig(prize_v=10.0), Strategy.STAY, 1, seed=0).standard_error == float("inf")
    with pytest.raises(ValueError):
        simulate_mean_payout(GameConfig(prize_v=10.0), Strategy.STAY, 0, seed=0)


@given(seed=st.integers(min_value=0, max_value=2**32 - 1), prize_v=st.floats(min_value=10.0, max_value=1e6), winning_cup=st.integers(0, 2))
@settings(max_examples=50)
def test_only_the_winning_label_holds_the_prize(seed, prize_v, winning_cup):
    labels = range_labels(np.random.default_rng(seed), GameConfig(prize_v=prize_v), winning_cup)
    assert len(labels) == N_CUPS
    holds = [label.lower <= prize_v <= label.upper for label in labels]
    assert holds == [cup == winning_cup for cup in range(N_CUPS)]
    ordered = sorted(labels, key=lambda label: label.lower)
    assert all(a.upper < b.lower for a, b in zip(ordered, ordered[1:]))


def test_cup_forecast_scores():
    scores = {s.forecast_id: s for s in score_cup_forecasts(200_000, seed=5)}
    assert scores["constant_one"].mean == pytest.approx(2.0 / 3.0, abs=0.005)
    assert scores["stay_one_third"].mean == pytest.approx(2.0 / 9.0, abs=0.002)
    assert scores["switch_two_thirds"].mean == pytest.approx(2.0 / 9.0, abs=0.002)


def test_cup_forecast_log_score():
    scores = {s.forecast_id: s.mean for s in score_cup_forecasts(1000, seed=5, rule=ScoringRuleKind.LOG)}
    assert scores["constant_one"] == float("inf")
