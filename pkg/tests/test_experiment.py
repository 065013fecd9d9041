import math

import pytest

from coverage_forecast.conditioning import ForecastKind
from coverage_forecast.constants import EITHER, NP, STAT_D, STAT_WIDTH, UMP
from coverage_forecast.experiment import (
    TABLE_NP_D,
    TABLE_UMP_W,
    marginal_deviation,
    outcome_ids,
    run_submarine,
    simulated_procedures,
    table_binnings,
    train_config,
)
from coverage_forecast.report import write_submarine_artifacts


def test_simulated_procedures_always_include_composite_parts(tiny_run_config):
    config = tiny_run_config.model_copy(update={"procedures": ["trivial"]})
    assert simulated_procedures(config) == ["trivial", "np", "ump", "sd"]
    assert outcome_ids(config)[-2:] == [EITHER, "ump_and_sd"]


def test_table_binnings(tiny_run_config):
    binnings = table_binnings(tiny_run_config)
    assert binnings[TABLE_NP_D].n_bins == 20
    assert binnings[TABLE_UMP_W].edges[-1] == 0.5
    assert binnings[(STAT_WIDTH, NP)].edges[-1] == 20.0


def test_training_pass_merge_is_exact(tiny_run_config):
    first, second = train_config(tiny_run_config, 0), train_config(tiny_run_config, 1)
    merged = first.merge(second)
    assert merged.coverage.n == 2 * tiny_run_config.n_trials
    assert merged.gap.n == merged.coverage.n
    assert merged.tables[TABLE_NP_D].counts.sum() == merged.coverage.n


def test_report_shape(tiny_report, tiny_run_config):
    assert len(tiny_report.sweep.per_config) == 4
    assert tiny_report.sweep.pooled.n == 4 * tiny_run_config.n_trials
    assert [s.rule_id for s in tiny_report.single] == ["constant_one", "constant_level", "np_width", "ump_width", "oracle"]
    assert [s.rule_id for s in tiny_report.paired] == ["constant_one", "constant_joint", "nesting", "max_width"]
    assert set(tiny_report.curve_deviation) == {"np", "ump", "d_quarter"}
    assert len(tiny_report.freeness) == 4


def test_report_identities(tiny_report):
    assert tiny_report.tower_error <= 1e-12
    assert tiny_report.composite.gap.identity_error == 0.0
    assert tiny_report.single_score("constant_level").mean == 0.25
    assert tiny_report.single_score("oracle").mean == 0.0
    assert tiny_report.single_score("np_width").mean <= 0.25


def test_report_values(tiny_report):
    assert tiny_report.composite.p_joint == pytest.approx(2.0 - math.sqrt(2.0), abs=0.02)
    assert marginal_deviation(tiny_report, NP, 0.5) < 0.05
    assert marginal_deviation(tiny_report, UMP, 0.5) < 0.05
    assert tiny_report.curve_deviation["d_quarter"] == pytest.approx(1.0 / 3.0, abs=0.1)


def test_absolute_width_is_flagged(tiny_report):
    reports = {(r.statistic_id, r.procedure_id): r for r in tiny_report.freeness}
    assert not reports[(STAT_WIDTH, NP)].is_theta_free
    assert reports[(STAT_D, NP)].n_bins_compared > 0


def test_per_config_scores_are_recorded(tiny_report):
    summary = next(iter(tiny_report.sweep.per_config.values()))
    assert ("single.constant_level", "brier") in summary.mean_scores
    assert summary.mean_scores[("single.constant_level", "brier")] == 0.25
    assert set(summary.coverage_by_procedure) == {"np", "ump", "sd", "trivial", EITHER, "ump_and_sd"}


def test_single_configuration_skips_theta_freeness(tiny_run_config):
    config = tiny_run_config.model_copy(update={"theta_grid": [0.0], "hull_width_grid": [10.0]})
    report = run_submarine(config)
    assert report.freeness == []
    assert report.single_score("np_width").mean < 0.25
    rules = {s.rule_id for s in report.single}
    assert ForecastKind.ORACLE.value not in rules


def test_thread_count_does_not_change_outputs(tiny_run_config, tiny_report, tmp_path):
    threaded = run_submarine(tiny_run_config.model_copy(update={"threads": 3}), include_oracle=True)
    assert threaded.single == tiny_report.single
    assert threaded.paired == tiny_report.paired
    first = write_submarine_artifacts(tiny_report, tmp_path / "one")
    second = write_submarine_artifacts(threaded, tmp_path / "three")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
