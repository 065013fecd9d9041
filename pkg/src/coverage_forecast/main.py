import argparse
import logging
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path

from pydantic import ValidationError

from coverage_forecast.checks import (
    check_monty,
    check_propriety,
    check_submarine,
    check_t_interval,
    checks_markdown,
    log_failures,
    resolve_tolerances,
)
from coverage_forecast.conditioning import lookup_forecast, t_interval_constancy
from coverage_forecast.config import RunConfig, load_run_config
from coverage_forecast.constants import DEFAULT_ALPHA, NP, PAIRED_LABELS, SINGLE_LABELS, STAT_D
from coverage_forecast.exceptions import CoverageForecastError, InvalidConfigurationError, UnknownStatisticError
from coverage_forecast.experiment import run_submarine
from coverage_forecast.monty import (
    GameConfig,
    Strategy,
    deal_game,
    expected_payout,
    range_labels,
    score_cup_forecasts,
    simulate_mean_payout,
    win_probability_exact,
)
from coverage_forecast.report import read_tables_csv, scores_markdown, write_manifest, write_submarine_artifacts
from coverage_forecast.scoring import ScoringRuleKind
from coverage_forecast.simulation import STREAM_LABELS, run_sweep, trial_generator, write_records_csv
from coverage_forecast.utils import markdown_table, round_half_even

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def parse_tolerances(pairs: "Sequence[str] | None") -> dict[str, float]:
    """Parse repeated ``KEY=VALUE`` tolerance overrides."""
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ValueError(f"Tolerance override must look like KEY=VALUE, got {pair!r}")
        overrides[key.strip()] = float(value)
    return overrides


def positive_int(value: str) -> int:
    """Argparse type for counts."""
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {number}")
    return number


@contextmanager
def settings_errors() -> Iterator[None]:
    """Report bad settings read inside the block as ``InvalidConfigurationError``."""
    try:
        yield
    except (ValidationError, tomllib.TOMLDecodeError, ValueError) as e:
        raise InvalidConfigurationError(str(e)) from e


def _load_run(args: argparse.Namespace) -> tuple[RunConfig, dict[str, tuple[float, float]]]:
    with settings_errors():
        config = load_run_config(args.config, _run_overrides(args))
        expected = resolve_tolerances(parse_tolerances(args.tolerance))
    return config, expected


def _run_overrides(args: argparse.Namespace) -> dict:
    return {"seed": args.seed, "n_trials": args.n_trials, "threads": args.threads, "out_dir": args.out_dir, "rule": getattr(args, "rule", None)}


def cmd_submarine(args: argparse.Namespace) -> int:
    """Run the sweep, write its artifacts and optionally check them."""
    started = datetime.now()
    config, expected = _load_run(args)
    report = run_submarine(config, include_oracle=args.oracle)
    paths = write_submarine_artifacts(report, config.out_dir)
    if args.records:
        rows = write_records_csv(args.records, run_sweep(config.simulation(), config.procedures))
        logger.info(f"Wrote {rows} record rows to {args.records}")
        paths.append(args.records)
    write_manifest(config.out_dir, "submarine", config, started, paths)

    print(scores_markdown(report.single, SINGLE_LABELS, str(config.rule)))
    print(scores_markdown(report.paired, PAIRED_LABELS, str(config.rule)))
    if not args.check:
        return EXIT_OK
    results = check_submarine(report, expected)
    print(checks_markdown(results))
    return EXIT_OK if log_failures(results) else EXIT_FAILURE


def _print_sample_game(config: GameConfig, seed: int) -> None:
    rng = trial_generator(seed, 1, STREAM_LABELS)
    deal = deal_game(rng)
    labels = range_labels(rng, config, deal.winning_cup)
    for cup, label in enumerate(labels):
        notes = [note for flag, note in ((cup == deal.pick, "your pick"), (cup == deal.removed, "removed by host"), (cup == deal.winning_cup, "prize")) if flag]
        print(f"Cup {cup}: ${label.lower:.2f} - ${label.upper:.2f}{'  (' + ', '.join(notes) + ')' if notes else ''}")
    print()


def cmd_monty(args: argparse.Namespace) -> int:
    """Analytic and simulated payouts of the shell game."""
    with settings_errors():
        config = GameConfig(prize_v=args.v, buy_in=args.buy_in, loss_fraction=args.loss_fraction)
    strategies = list(Strategy) if args.strategy == "both" else [Strategy(args.strategy)]
    if args.verbose:
        _print_sample_game(config, args.seed)
    rows = []
    for strategy in strategies:
        estimate = simulate_mean_payout(config, strategy, args.n, args.seed)
        rows.append(
            [
                str(strategy),
                str(win_probability_exact(strategy)),
                f"{expected_payout(config, strategy):.2f}",
                f"{estimate.mean:.2f}",
                f"{estimate.standard_error:.4f}",
            ]
        )
    print(markdown_table(["Strategy", "P(win)", "Analytic payout", "Simulated payout", "Std. error"], rows))
    scores = score_cup_forecasts(args.n, args.seed, ScoringRuleKind(args.rule))
    print(markdown_table(["Forecast", "Cup", "q", f"Mean {args.rule} score"], [[s.forecast_id, str(s.cup), round_half_even(s.q), round_half_even(s.mean)] for s in scores]))
    return EXIT_OK


def cmd_forecast(args: argparse.Namespace) -> int:
    """Look a statistic value up in a persisted conditional-coverage table."""
    if not 0.0 < args.alpha < 1.0:
        raise InvalidConfigurationError(f"--alpha must lie in (0, 1), got {args.alpha}")
    tables = read_tables_csv(args.table)
    key = (args.statistic, args.procedure)
    if key not in tables:
        raise UnknownStatisticError(f"{args.table} has no table for statistic {args.statistic!r} and procedure {args.procedure!r}; available: {sorted(tables)}")
    lookup = lookup_forecast(tables[key], args.statistic_value, args.alpha)
    print(f"q = {round_half_even(lookup.forecast.q)}")
    print(f"bin = [{lookup.bin_lower!r}, {lookup.bin_upper!r}]")
    print(f"count = {lookup.count}")
    print(f"fallback = {str(lookup.fallback).lower()}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    """Run the whole acceptance suite."""
    started = datetime.now()
    config, expected = _load_run(args)
    report = run_submarine(config)
    paths = write_submarine_artifacts(report, config.out_dir)
    results = check_submarine(report, expected)
    results += check_t_interval(t_interval_constancy(n=5, alpha=0.05, n_trials=args.t_trials, seed=config.seed), expected)
    results += check_propriety(expected, seed=config.seed)
    results += check_monty(expected, n=args.monty_n, seed=config.seed)
    write_manifest(config.out_dir, "check", config, started, paths)
    print(checks_markdown(results))
    return EXIT_OK if log_failures(results) else EXIT_FAILURE


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="TOML file with flat run settings.")
    parser.add_argument("--seed", type=int, default=None, help="Master seed (overrides the config file).")
    parser.add_argument("--n-trials", type=int, default=None, help="Trials per configuration.")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads; results do not depend on it.")
    parser.add_argument("--out-dir", type=Path, default=None, help="Output directory (default: $COVERAGE_FORECAST_OUT_DIR or output/).")
    parser.add_argument("--tolerance", action="append", metavar="KEY=VALUE", help="Override one check tolerance; repeatable.")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the four subcommands."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="Debug logging.")

    parser = argparse.ArgumentParser(prog="coverage-forecast", description="Coverage forecasts for confidence procedures.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    submarine = subparsers.add_parser("submarine", parents=[common], help="Run the submarine sweep and score the forecast rules.")
    _add_run_options(submarine)
    submarine.add_argument("--check", action="store_true", help="Compare outputs with the expected values; exit 1 on failure.")
    submarine.add_argument("--records", type=Path, default=None, help="Also export every training record to this CSV.")
    submarine.add_argument("--rule", choices=[r.value for r in ScoringRuleKind], default=None, help="Scoring rule for the tables.")
    submarine.add_argument("--oracle", action="store_true", help="Add the oracle forecast row to the single-procedure scores.")
    submarine.set_defaults(handler=cmd_submarine)

    monty = subparsers.add_parser("monty", parents=[common], help="Stay/switch payouts of the shell game.")
    monty.add_argument("--v", type=float, default=10.0, help="Hidden amount in dollars (at least 10).")
    monty.add_argument("--n", type=positive_int, default=1_000_000, help="Number of simulated games.")
    monty.add_argument("--strategy", choices=["stay", "switch", "both"], default="both")
    monty.add_argument("--seed", type=int, default=0)
    monty.add_argument("--buy-in", type=float, default=5.0)
    monty.add_argument("--loss-fraction", type=float, default=0.5)
    monty.add_argument("--rule", choices=[r.value for r in ScoringRuleKind], default=ScoringRuleKind.BRIER.value)
    monty.set_defaults(handler=cmd_monty)

    forecast = subparsers.add_parser("forecast", parents=[common], help="Look up the coverage forecast for a statistic value.")
    forecast.add_argument("table", type=Path, help="conditional_coverage.csv written by the submarine command.")
    forecast.add_argument("--statistic-value", type=float, required=True)
    forecast.add_argument("--statistic", default=STAT_D)
    forecast.add_argument("--procedure", default=NP)
    forecast.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="Empty bins fall back to 1 - alpha.")
    forecast.set_defaults(handler=cmd_forecast)

    check = subparsers.add_parser("check", parents=[common], help="Run the whole acceptance suite.")
    _add_run_options(check)
    check.add_argument("--monty-n", type=positive_int, default=1_000_000, help="Games per Monty strategy.")
    check.add_argument("--t-trials", type=positive_int, default=100_000, help="Trials per mean for the t-interval check.")
    check.set_defaults(handler=cmd_check)
    return parser


def main(argv: "Sequence[str] | None" = None) -> int:
    """Parse arguments, configure logging and dispatch; returns the exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(asctime)s - %(levelname)s - %(name)s - %(message)s")
    try:
        return args.handler(args)
    except InvalidConfigurationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except CoverageForecastError as e:
        logger.error(str(e))
        return EXIT_FAILURE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_FAILURE


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
