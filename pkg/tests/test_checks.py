import math

import pytest

from coverage_forecast.checks import (
    CheckResult,
    bernoulli_violations,
    check_monty,
    check_propriety,
    check_submarine,
    check_t_interval,
    checks_markdown,
    log_failures,
    propriety_violations,
    resolve_tolerances,
)
from coverage_forecast.conditioning import t_interval_constancy
from coverage_forecast.constants import EXPECTED, STAT_STUDENTIZED_RANGE


def test_propriety_grid_has_no_violations():
    assert propriety_violations() == 0


def test_bernoulli_forecasts_lose_to_p():
    assert bernoulli_violations(20_000, seed=1) == 0


def test_check_propriety_passes():
    assert all(r.passed for r in check_propriety(resolve_tolerances(), n=20_000, seed=1))


def test_resolve_tolerances():
    expected = resolve_tolerances({"tower": 1e-9})
    assert expected["tower"] == (0.0, 1e-9)
    assert expected["t.critical"] == EXPECTED["t.critical"]


@pytest.mark.parametrize("overrides", [{"no.such.key": 0.1}, {"tower": -1.0}])
def test_resolve_tolerances_rejects_bad_overrides(overrides):
    with pytest.raises(ValueError):
        resolve_tolerances(overrides)


def test_check_result():
    assert CheckResult("x", 0.51, 0.5, 0.02).passed
    assert not CheckResult("x", 0.53, 0.5, 0.02).passed
    assert not CheckResult("x", math.nan, 0.5, 0.02).passed
    assert not CheckResult("m", -5.1, -5.0, 4.0, scale=0.01).passed
    assert CheckResult("m", -5.03, -5.0, 4.0, scale=0.01).passed


def test_check_monty():
    results = {r.key: r for r in check_monty(resolve_tolerances(), n=100_000, seed=3)}
    assert results["monty.exact_stay"].passed
    assert results["monty.exact_switch"].passed
    assert results["monty.stay"].passed and results["monty.switch"].passed
    assert results["monty.stay"].scale > 0.0


def test_check_submarine_covers_every_group(tiny_report):
    results = {r.key: r for r in check_submarine(tiny_report, resolve_tolerances())}
    assert {"marginal.np", "single.np_width", "curve.d_quarter", "composite.gap_identity", "paired.max_width", "theta_free.np_d", "tower"} <= set(results)
    assert results["composite.gap_identity"].passed
    assert results["tower"].passed
    assert results["single.constant_level"].passed


def test_checks_markdown_and_logging(caplog):
    results = [CheckResult("good", 1.0, 1.0, 0.0), CheckResult("bad", 2.0, 1.0, 0.5)]
    markdown = checks_markdown(results)
    assert "PASS" in markdown and "FAIL" in markdown
    assert not log_failures(results)
    assert "Check bad failed" in caplog.text
    assert log_failures(results[:1])


def test_t_decile_check_bins_on_the_studentized_range():
    constancy = t_interval_constancy(n_trials=20_000, seed=5)
    results = {r.key: r for r in check_t_interval(constancy, resolve_tolerances())}
    assert constancy.ancillary_table.statistic_id == STAT_STUDENTIZED_RANGE
    nominal = 1.0 - constancy.alpha
    ancillary_deviation = max(abs(coverage - nominal) for _, coverage in constancy.ancillary_table.per_bin if coverage is not None)
    assert results["t.decile"].value == pytest.approx(ancillary_deviation, abs=1e-15)
    width_deviation = max(abs(coverage - nominal) for _, coverage in constancy.width_table.per_bin if coverage is not None)
    assert results["t.decile"].value < width_deviation
