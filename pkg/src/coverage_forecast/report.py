"""CSV, markdown and manifest artifacts of a submarine run."""

import csv
import logging
from collections.abc import Iterable, Mapping, Sequence
from datetime import datetime
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict

from coverage_forecast import __version__
from coverage_forecast.composite import NestingOutcome
from coverage_forecast.conditioning import Binning, ConditionalCoverageTable, RuleScore, ThetaFreenessReport
from coverage_forecast.constants import (
    MANIFEST_JSON,
    PAIRED_CSV,
    PAIRED_LABELS,
    PAIRED_MD,
    SINGLE_CSV,
    SINGLE_LABELS,
    SINGLE_MD,
    STAT_MAX_WIDTH,
    SUMMARY_CSV,
    TABLES_CSV,
    THETA_FREENESS_CSV,
)
from coverage_forecast.exceptions import MisconfiguredExperimentError
from coverage_forecast.experiment import SubmarineReport
from coverage_forecast.simulation import SweepResult
from coverage_forecast.utils import format_float, markdown_table, round_half_even

logger = logging.getLogger(__name__)

TABLE_CSV_COLUMNS = ("statistic", "procedure", "bin_lo", "bin_hi", "count", "coverage")
FREENESS_CSV_COLUMNS = ("statistic", "procedure", "max_cross_config_deviation", "max_raw_range", "tolerance", "is_theta_free", "n_configs", "n_bins_compared")
SCORE_CSV_COLUMNS = ("forecast", "mean", "variance")


class RunManifest(BaseModel):
    """What a run wrote and everything needed to repeat it."""

    model_config = ConfigDict(frozen=True)

    command: str
    config: dict[str, Any]
    started: datetime
    finished: datetime
    outputs: list[str]
    version: str = __version__


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {path}")
    return path


def write_summary_csv(path: Path, sweep: SweepResult) -> Path:
    """One row per configuration: coverage per outcome and mean score per forecast."""
    first = next(iter(sweep.per_config.values()))
    outcomes = list(first.coverage_by_procedure)
    scores = list(first.mean_scores)
    header = ["theta", "hull_width", "n", *(f"coverage_{o}" for o in outcomes), *(f"{forecast}.{rule}" for forecast, rule in scores)]
    rows = (
        [format_float(s.theta), format_float(s.hull_width), s.n, *(format_float(s.coverage_by_procedure[o]) for o in outcomes), *(format_float(s.mean_scores[k]) for k in scores)]
        for s in sweep.per_config.values()
    )
    return _write_rows(path, header, rows)


def table_rows(table: ConditionalCoverageTable, statistic_label: "str | None" = None) -> list[list[str]]:
    """CSV rows of one table; an empty bin has an empty coverage field."""
    rows = []
    for index, (count, coverage) in enumerate(table.per_bin):
        lower, upper = table.binning.bounds(index)
        rows.append([statistic_label or table.statistic_id, table.procedure_id, format_float(lower), format_float(upper), str(count), "" if coverage is None else format_float(coverage)])
    return rows


def stratum_label(code: int) -> str:
    """Statistic id under which one stratum of the max-width table is stored."""
    return f"{STAT_MAX_WIDTH}|{NestingOutcome(code).name.lower()}"


def write_tables_csv(path: Path, report: SubmarineReport) -> Path:
    """Pooled training tables, the max-width strata included."""
    rows = [row for table in report.tables.values() for row in table_rows(table)]
    for code, table in enumerate(report.max_width_table.tables):
        rows.extend(table_rows(table, stratum_label(code)))
    return _write_rows(path, TABLE_CSV_COLUMNS, rows)


def read_tables_csv(path: Path) -> dict[tuple[str, str], ConditionalCoverageTable]:
    """Tables keyed by (statistic, procedure), as written by ``write_tables_csv``."""
    grouped: dict[tuple[str, str], list[dict[str, str]]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != TABLE_CSV_COLUMNS:
            raise MisconfiguredExperimentError(f"{path}: expected header {','.join(TABLE_CSV_COLUMNS)}, got {reader.fieldnames}")
        for row in reader:
            grouped.setdefault((row["statistic"], row["procedure"]), []).append(row)
    if not grouped:
        raise MisconfiguredExperimentError(f"{path} holds no tables")
    tables = {}
    for (statistic_id, procedure_id), rows in grouped.items():
        edges = [float(rows[0]["bin_lo"])] + [float(row["bin_hi"]) for row in rows]
        counts = [int(row["count"]) for row in rows]
        hits = [round(float(row["coverage"]) * count) if row["coverage"] else 0 for row, count in zip(rows, counts)]
        tables[(statistic_id, procedure_id)] = ConditionalCoverageTable(statistic_id, procedure_id, Binning(tuple(edges)), tuple(counts), tuple(hits))
    return tables


def write_freeness_csv(path: Path, reports: Sequence[ThetaFreenessReport]) -> Path:
    """One row per theta-freeness report."""
    rows = (
        [r.statistic_id, r.procedure_id, format_float(r.max_cross_config_deviation), format_float(r.max_raw_range), format_float(r.tolerance), str(r.is_theta_free).lower(), r.n_configs, r.n_bins_compared]
        for r in reports
    )
    return _write_rows(path, FREENESS_CSV_COLUMNS, rows)


def write_scores_csv(path: Path, scores: Sequence[RuleScore]) -> Path:
    """Forecast, pooled mean score and across-configuration variance."""
    return _write_rows(path, SCORE_CSV_COLUMNS, ([s.rule_id, format_float(s.mean), format_float(s.variance)] for s in scores))


def scores_markdown(scores: Sequence[RuleScore], labels: Mapping[str, str], rule: str) -> str:
    """Markdown rendering of a score table; numbers are the CSV values rounded half-to-even to 3 decimals."""
    rows = [[labels.get(s.rule_id, s.rule_id), round_half_even(s.mean), round_half_even(s.variance)] for s in scores]
    return markdown_table(["Forecast", f"Mean {rule} score", "Variance"], rows)


def write_submarine_artifacts(report: SubmarineReport, out_dir: Path) -> list[Path]:
    """Write every artifact of a submarine run except the manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rule = str(report.config.rule)
    paths = [
        write_summary_csv(out_dir / SUMMARY_CSV, report.sweep),
        write_tables_csv(out_dir / TABLES_CSV, report),
        write_freeness_csv(out_dir / THETA_FREENESS_CSV, report.freeness),
        write_scores_csv(out_dir / SINGLE_CSV, report.single),
        write_scores_csv(out_dir / PAIRED_CSV, report.paired),
    ]
    for name, scores, labels in ((SINGLE_MD, report.single, SINGLE_LABELS), (PAIRED_MD, report.paired, PAIRED_LABELS)):
        path = out_dir / name
        path.write_text(scores_markdown(scores, labels, rule))
        logger.info(f"Wrote {path}")
        paths.append(path)
    return paths


def write_manifest(out_dir: Path, command: str, config: BaseModel, started: datetime, outputs: Sequence[Path]) -> Path:
    """Record the run next to its outputs."""
    path = out_dir / MANIFEST_JSON
    manifest = RunManifest(
        command=command,
        config=config.model_dump(mode="json"),
        started=started,
        finished=datetime.now(),
        outputs=[str(p) for p in outputs],
    )
    path.write_text(manifest.model_dump_json(indent=2))
    logger.info(f"Wrote {path}")
    return path
