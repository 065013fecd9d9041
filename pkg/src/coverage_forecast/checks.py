"""Acceptance checks: measured values against expected targets and tolerances."""

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from coverage_forecast.conditioning import TConstancyReport
from coverage_forecast.constants import EITHER, EXPECTED, NP, SD, STAT_D, STAT_NESTING, STAT_W, UMP
from coverage_forecast.experiment import SubmarineReport, marginal_deviation
from coverage_forecast.monty import GameConfig, Strategy, simulate_mean_payout, win_probability_exact
from coverage_forecast.scoring import ScoringRuleKind, expected_score, score_array
from coverage_forecast.utils import markdown_table, round_half_even

logger = logging.getLogger(__name__)

PROPRIETY_GRID = [k / 100 for k in range(1, 100)]
BERNOULLI_PS = (0.25, 0.5, 0.75)


@dataclass(frozen=True)
class CheckResult:
    """One measured value; it passes when |value - target| <= tolerance * scale."""

    key: str
    value: float
    target: float
    tolerance: float
    scale: float = 1.0

    @property
    def passed(self) -> bool:
        """Whether the value is within tolerance; NaN never passes."""
        return abs(self.value - self.target) <= self.tolerance * self.scale


def resolve_tolerances(overrides: "Mapping[str, float] | None" = None) -> dict[str, tuple[float, float]]:
    """Expected (target, tolerance) per key with per-key tolerance overrides."""
    expected = dict(EXPECTED)
    for key, tolerance in (overrides or {}).items():
        if key not in expected:
            raise ValueError(f"Unknown check key {key!r}; known keys: {sorted(expected)}")
        if tolerance < 0:
            raise ValueError(f"Tolerance for {key!r} must be non-negative, got {tolerance}")
        expected[key] = (expected[key][0], tolerance)
    return expected


def _result(key: str, value: float, expected: Mapping[str, tuple[float, float]], scale: float = 1.0) -> CheckResult:
    target, tolerance = expected[key]
    return CheckResult(key, float(value), target, tolerance, scale)


def check_submarine(report: SubmarineReport, expected: Mapping[str, tuple[float, float]]) -> list[CheckResult]:
    """Marginal coverage, both score tables, the coverage curves and the composite quantities."""
    results = []
    for procedure_id in (NP, UMP, SD):
        if procedure_id in report.config.procedures:
            key = f"marginal.{procedure_id}"
            target = expected[key][0]
            results.append(_result(key, target + marginal_deviation(report, procedure_id, target), expected))

    for rule_id in ("constant_one", "constant_level", "np_width", "ump_width"):
        results.append(_result(f"single.{rule_id}", report.single_score(rule_id).mean, expected))
    results.append(_result("single.variance", max(s.variance for s in report.single), expected))
    level = report.single_score("constant_level").mean
    dominance = max(0.0, report.single_score("np_width").mean - level, report.single_score("ump_width").mean - level)
    results.append(_result("single.dominance", dominance, expected))

    for key in ("np", "ump", "d_quarter"):
        results.append(_result(f"curve.{key}", report.curve_deviation[key], expected))

    composite = report.composite
    results.extend(
        [
            _result("composite.p_joint", composite.p_joint, expected),
            _result("composite.sd_inside_ump", composite.coverage_sd_inside_ump, expected),
            _result("composite.ump_inside_sd", composite.coverage_ump_inside_sd, expected),
            _result("composite.gap_sd_inside_ump", composite.gap.sd_inside_ump, expected),
            _result("composite.gap_ump_inside_sd", composite.gap.ump_inside_sd, expected),
            _result("composite.gap_identity", composite.gap.identity_error, expected),
        ]
    )

    for rule_id in ("constant_one", "constant_joint", "nesting", "max_width"):
        results.append(_result(f"paired.{rule_id}", report.paired_score(rule_id).mean, expected))
    results.append(_result("paired.variance", max(s.variance for s in report.paired), expected))
    joint, nesting, max_width = (report.paired_score(r).mean for r in ("constant_joint", "nesting", "max_width"))
    results.append(_result("paired.ordering", max(0.0, nesting - joint, max_width - nesting), expected))

    by_key = {(r.statistic_id, r.procedure_id): r for r in report.freeness}
    for key, table_key in (("theta_free.np_d", (STAT_D, NP)), ("theta_free.ump_w", (STAT_W, UMP)), ("theta_free.nesting", (STAT_NESTING, EITHER))):
        if table_key in by_key:
            results.append(_result(key, by_key[table_key].max_cross_config_deviation, expected))

    results.append(_result("tower", report.tower_error, expected))
    return results


def check_t_interval(constancy: TConstancyReport, expected: Mapping[str, tuple[float, float]]) -> list[CheckResult]:
    """Checks on the t interval; its decile check bins on the studentized range, not the width."""
    return [
        _result("t.marginal", constancy.marginal_coverage, expected),
        _result("t.decile", constancy.max_decile_deviation, expected),
        _result("t.critical", constancy.critical_value, expected),
    ]


def propriety_violations(rules: Sequence[ScoringRuleKind] = tuple(ScoringRuleKind)) -> int:
    """Grid points where some q != p does not score strictly worse than q = p."""
    violations = 0
    for rule in rules:
        for p in PROPRIETY_GRID:
            best = expected_score(rule, p, p)
            violations += sum(1 for q in PROPRIETY_GRID if q != p and not expected_score(rule, q, p) > best)
    return violations


def bernoulli_violations(n: int, seed: int, rules: Sequence[ScoringRuleKind] = tuple(ScoringRuleKind)) -> int:
    """
    Cases where a {0, 1}-valued forecast, chosen without seeing z, fails to score worse than q = p.

    The candidates are the constants 0 and 1 and an independent fair coin.
    """
    rng = np.random.default_rng(seed)
    violations = 0
    for p in BERNOULLI_PS:
        z = (rng.random(n) < p).astype(float)
        coin = (rng.random(n) < 0.5).astype(float)
        for rule in rules:
            baseline = float(np.mean(score_array(rule, np.full(n, p), z)))
            for forecast in (np.zeros(n), np.ones(n), coin):
                mean = float(np.mean(score_array(rule, forecast, z)))
                if not mean > baseline:
                    violations += 1
    return violations


def check_propriety(expected: Mapping[str, tuple[float, float]], n: int = 100_000, seed: int = 0) -> list[CheckResult]:
    """Strict propriety of both rules on the 99-point grid and on simulated Bernoulli data."""
    return [
        _result("propriety.grid", propriety_violations(), expected),
        _result("propriety.bernoulli", bernoulli_violations(n, seed), expected),
    ]


def check_monty(expected: Mapping[str, tuple[float, float]], n: int = 1_000_000, seed: int = 0, prize_v: float = 10.0) -> list[CheckResult]:
    """Exact win probabilities and simulated payouts at v = 10, the latter within a number of standard errors."""
    config = GameConfig(prize_v=prize_v)
    results = [
        _result("monty.exact_stay", win_probability_exact(Strategy.STAY), expected),
        _result("monty.exact_switch", win_probability_exact(Strategy.SWITCH), expected),
    ]
    for strategy in Strategy:
        estimate = simulate_mean_payout(config, strategy, n, seed)
        results.append(_result(f"monty.{strategy}", estimate.mean, expected, scale=estimate.standard_error))
    return results


def checks_markdown(results: Sequence[CheckResult]) -> str:
    """Pass/fail table."""
    rows = []
    for r in results:
        tolerance = f"{r.tolerance:g} SE" if r.scale != 1.0 else f"{r.tolerance:g}"
        rows.append([r.key, _format(r.value), _format(r.target), tolerance, "PASS" if r.passed else "FAIL"])
    return markdown_table(["Check", "Value", "Target", "Tolerance", "Result"], rows)


def _format(value: float) -> str:
    if math.isfinite(value) and value != 0.0 and abs(value) < 1e-3:
        return f"{value:.3e}"
    return round_half_even(value, 4)


def log_failures(results: Sequence[CheckResult]) -> bool:
    """Log every failed check; return True when all passed."""
    failed = [r for r in results if not r.passed]
    for r in failed:
        logger.error(f"Check {r.key} failed: {r.value} vs {r.target} +/- {r.tolerance * r.scale}")
    logger.info(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return not failed
