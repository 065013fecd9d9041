import math

import pytest

from coverage_forecast.oracles import (
    SD_RELATIVE_WIDTH,
    bin_average,
    composite_oracle,
    d_density,
    expected_table_brier,
    np_coverage_given_d,
    np_width_brier,
    sd_marginal_coverage,
    ump_coverage_given_d,
    ump_coverage_given_w,
    ump_width_brier,
    w_density,
)


def test_coverage_curves():
    assert np_coverage_given_d(0.25) == pytest.approx(1.0 / 3.0)
    assert np_coverage_given_d(0.9) == 1.0
    assert ump_coverage_given_d(0.25) == np_coverage_given_d(0.25)
    assert ump_coverage_given_d(0.7) == 1.0
    assert ump_coverage_given_w(0.3) == pytest.approx(0.6)


def test_bin_average_of_d_quarter_bin():
    assert bin_average(np_coverage_given_d, d_density, 0.24, 0.26) == pytest.approx(1.0 / 3.0, abs=1e-9)


def test_bin_average_rejects_empty_bin():
    with pytest.raises(ValueError):
        bin_average(ump_coverage_given_w, w_density, 0.6, 0.7)


def test_marginal_coverages_are_one_half():
    assert bin_average(np_coverage_given_d, d_density, 0.0, 1.0) == pytest.approx(0.5, abs=1e-9)
    assert bin_average(ump_coverage_given_w, w_density, 0.0, 0.5) == pytest.approx(0.5, abs=1e-9)
    assert sd_marginal_coverage() == pytest.approx(0.5, abs=1e-12)


def test_sd_marginal_coverage_rejects_bad_reach():
    with pytest.raises(ValueError):
        sd_marginal_coverage(1.5)


def test_table_briers():
    assert expected_table_brier(np_coverage_given_d, d_density, 0.0, 1.0) == pytest.approx(np_width_brier(), abs=1e-9)
    assert expected_table_brier(ump_coverage_given_w, w_density, 0.0, 0.5) == pytest.approx(ump_width_brier(), abs=1e-9)
    assert np_width_brier() == pytest.approx(0.1137, abs=1e-4)


def test_composite_oracle():
    oracle = composite_oracle()
    assert oracle.p_joint == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-9)
    assert oracle.p_sd_inside_ump == pytest.approx(1.0 - 2.0 * SD_RELATIVE_WIDTH, abs=1e-9)
    assert oracle.coverage_sd_inside_ump == pytest.approx(0.5 + SD_RELATIVE_WIDTH, abs=1e-9)
    assert oracle.coverage_ump_inside_sd == pytest.approx(0.4393, abs=1e-3)
    assert oracle.gap_sd_inside_ump == pytest.approx(SD_RELATIVE_WIDTH**2, abs=1e-9)
    assert oracle.gap_ump_inside_sd == pytest.approx(SD_RELATIVE_WIDTH**2, abs=1e-9)
    assert oracle.p_joint - oracle.p_both == pytest.approx(oracle.gap_sd_inside_ump + oracle.gap_ump_inside_sd, abs=1e-9)
    assert oracle.brier_constant_joint == pytest.approx(0.2426, abs=1e-3)
    assert oracle.brier_nesting == pytest.approx(0.2124, abs=1e-3)
    assert oracle.brier_max_width == pytest.approx(0.2065, abs=1e-3)
    assert oracle.brier_max_width < oracle.brier_nesting < oracle.brier_constant_joint
