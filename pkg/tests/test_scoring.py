import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coverage_forecast.exceptions import MisconfiguredExperimentError
from coverage_forecast.scoring import (
    Forecast,
    ScoreTally,
    ScoringRuleKind,
    across_config_variance,
    brier_expected_score,
    empirical_mean_score,
    expected_score,
    optimal_constant_forecast,
    score,
)

probabilities = st.floats(min_value=0.01, max_value=0.99)


def test_brier_values():
    assert score(ScoringRuleKind.BRIER, 1.0, 1) == 0.0
    assert score(ScoringRuleKind.BRIER, 1.0, 0) == 1.0
    assert score(ScoringRuleKind.BRIER, 0.5, 0) == 0.25


def test_log_values():
    assert score(ScoringRuleKind.LOG, 0.5, 1) == pytest.approx(math.log(2.0))
    assert score(ScoringRuleKind.LOG, 1.0, 0) == math.inf
    assert score(ScoringRuleKind.LOG, 0.0, 0) == 0.0


def test_score_accepts_rule_names():
    assert score("brier", 0.25, 1) == pytest.approx(0.5625)


def test_score_rejects_bad_inputs():
    with pytest.raises(ValueError):
        score(ScoringRuleKind.BRIER, 1.5, 1)
    with pytest.raises(ValueError):
        score(ScoringRuleKind.BRIER, 0.5, 2)
    with pytest.raises(ValueError):
        Forecast(-0.1)


@given(q=probabilities, p=probabilities)
@settings(max_examples=200)
def test_strict_propriety(q, p):
    for rule in ScoringRuleKind:
        if abs(q - p) > 1e-6:
            assert expected_score(rule, q, p) > expected_score(rule, p, p)


@given(q=probabilities, p=probabilities)
@settings(max_examples=50)
def test_brier_closed_form(q, p):
    assert expected_score(ScoringRuleKind.BRIER, q, p) == pytest.approx(brier_expected_score(q, p))


def test_expected_score_skips_impossible_outcomes():
    # q = 1 never pays the infinite log loss when z = 0 cannot happen
    assert expected_score(ScoringRuleKind.LOG, 1.0, 1.0) == 0.0


def test_optimal_constant_forecast_is_p():
    for rule in ScoringRuleKind:
        assert optimal_constant_forecast(rule, 0.3).q == 0.3


def test_empirical_mean_score():
    mean, variance = empirical_mean_score(ScoringRuleKind.BRIER, [(1.0, 1), (1.0, 0)])
    assert mean == 0.5
    assert variance == 0.25


def test_empirical_mean_score_rejects_empty_input():
    with pytest.raises(MisconfiguredExperimentError):
        empirical_mean_score(ScoringRuleKind.BRIER, [])


def test_empirical_mean_score_infinite_log_loss():
    assert empirical_mean_score(ScoringRuleKind.LOG, [(0.0, 1), (0.5, 1)]) == (math.inf, math.inf)


def test_across_config_variance():
    assert across_config_variance([0.5, 0.5, 0.5]) == 0.0
    assert across_config_variance([0.0, 1.0]) == 0.25
    assert across_config_variance([0.1, math.inf]) == math.inf
    with pytest.raises(MisconfiguredExperimentError):
        across_config_variance([])


def test_tally_matches_per_pair_mean():
    rng = np.random.default_rng(4)
    forecasts = [0.1, 0.5, 0.9]
    cells = rng.integers(0, 3, size=5000)
    z = rng.integers(0, 2, size=5000)
    tally = ScoreTally(forecasts)
    tally.add(cells, z)
    pairs = [(forecasts[c], int(o)) for c, o in zip(cells, z)]
    for rule in ScoringRuleKind:
        mean, variance = empirical_mean_score(rule, pairs)
        assert tally.mean(rule) == pytest.approx(mean, abs=1e-12)
        assert tally.variance(rule) == pytest.approx(variance, abs=1e-12)


def test_tally_merge_is_order_free():
    rng = np.random.default_rng(5)
    parts = []
    for _ in range(3):
        tally = ScoreTally([0.2, 0.7])
        tally.add(rng.integers(0, 2, size=1000), rng.integers(0, 2, size=1000))
        parts.append(tally)
    forward = parts[0].merge(parts[1]).merge(parts[2])
    backward = parts[2].merge(parts[1].merge(parts[0]))
    assert np.array_equal(forward.counts, backward.counts)
    assert forward.mean(ScoringRuleKind.BRIER) == backward.mean(ScoringRuleKind.BRIER)


def test_tally_rejects_mismatched_merge():
    with pytest.raises(ValueError):
        ScoreTally([0.5]).merge(ScoreTally([0.4]))


def test_empty_tally_cannot_be_scored():
    with pytest.raises(MisconfiguredExperimentError):
        ScoreTally([0.5]).mean(ScoringRuleKind.BRIER)
