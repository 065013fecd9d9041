import pytest

from coverage_forecast.constants import MANIFEST_JSON, PAIRED_CSV, SINGLE_CSV, SUMMARY_CSV, TABLES_CSV
from coverage_forecast.main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, build_parser, main, parse_tolerances

SMALL_RUN = """
theta_grid = [0.0, 2.0]
hull_width_grid = [10.0, 20.0]
n_trials = 4000
chunk_size = 1024
seed = 13
bins_d = 10
bins_w = 5
min_occupancy = 50
"""


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("configs") / "small.toml"
    path.write_text(SMALL_RUN)
    return path


@pytest.fixture(scope="module")
def submarine_out(small_config, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("submarine")
    assert main(["submarine", "--config", str(small_config), "--out-dir", str(out_dir), "--threads", "1"]) == EXIT_OK
    return out_dir


def test_parse_tolerances():
    assert parse_tolerances(["tower=1e-9", " t.decile = 0.02"]) == {"tower": 1e-9, "t.decile": 0.02}
    assert parse_tolerances(None) == {}
    with pytest.raises(ValueError):
        parse_tolerances(["tower"])


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_monty_rejects_small_prize():
    assert main(["monty", "--v", "9"]) == EXIT_CONFIG


def test_monty_switch(capsys):
    assert main(["monty", "--strategy", "switch", "--n", "20000", "--seed", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "| switch | 2/3 | 0.00 |" in out
    assert "switch_two_thirds" in out


def test_monty_verbose_prints_a_game(capsys):
    assert main(["monty", "--verbose", "--n", "100", "--v", "20"]) == EXIT_OK
    out = capsys.readouterr().out
    assert sum(line.startswith("Cup ") for line in out.splitlines()) == 3
    assert "| stay | 1/3 | -5.00 |" in out


def test_submarine_writes_artifacts(submarine_out):
    for name in (SUMMARY_CSV, TABLES_CSV, SINGLE_CSV, PAIRED_CSV, MANIFEST_JSON):
        assert (submarine_out / name).exists()


def test_submarine_prints_tables(small_config, tmp_path, capsys):
    assert main(["submarine", "--config", str(small_config), "--out-dir", str(tmp_path), "--oracle"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "| Constant 1-α | 0.250 | 0.000 |" in out
    assert "| Oracle | 0.000 | 0.000 |" in out
    assert "Nest. Cond." in out


def test_submarine_outputs_ignore_threads(small_config, submarine_out, tmp_path):
    assert main(["submarine", "--config", str(small_config), "--out-dir", str(tmp_path), "--threads", "2"]) == EXIT_OK
    for name in (SUMMARY_CSV, TABLES_CSV, SINGLE_CSV, PAIRED_CSV):
        assert (tmp_path / name).read_bytes() == (submarine_out / name).read_bytes()


def test_submarine_records(small_config, tmp_path):
    records = tmp_path / "records.csv"
    assert main(["submarine", "--config", str(small_config), "--out-dir", str(tmp_path), "--n-trials", "100", "--records", str(records)]) == EXIT_OK
    lines = records.read_text().splitlines()
    assert lines[0] == "theta,hull_width,x1,x2,proc,lower,upper,covered,D,W"
    # four configurations, four procedures
    assert len(lines) == 1 + 4 * 100 * 4


def test_submarine_bad_config(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("seeds = 3\n")
    assert main(["submarine", "--config", str(path), "--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_submarine_missing_config(tmp_path):
    assert main(["submarine", "--config", str(tmp_path / "absent.toml"), "--out-dir", str(tmp_path)]) == EXIT_FAILURE


def test_submarine_bad_tolerance(small_config, tmp_path):
    assert main(["submarine", "--config", str(small_config), "--out-dir", str(tmp_path), "--tolerance", "nope=1"]) == EXIT_CONFIG


def test_forecast_certain_bin(submarine_out, capsys):
    assert main(["forecast", str(submarine_out / TABLES_CSV), "--statistic-value", "0.9"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "q = 1.000" in out
    assert "fallback = false" in out


def test_forecast_out_of_range(submarine_out):
    assert main(["forecast", str(submarine_out / TABLES_CSV), "--statistic-value", "1.5"]) == EXIT_FAILURE


def test_forecast_unknown_table(submarine_out):
    assert main(["forecast", str(submarine_out / TABLES_CSV), "--statistic-value", "0.2", "--statistic", "length"]) == EXIT_FAILURE


def test_forecast_empty_bin_falls_back(tmp_path, capsys):
    path = tmp_path / "tables.csv"
    path.write_text("statistic,procedure,bin_lo,bin_hi,count,coverage\nD,np,0.0,0.5,0,\nD,np,0.5,1.0,10,1.0\n")
    assert main(["forecast", str(path), "--statistic-value", "0.2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "q = 0.500" in out
    assert "count = 0" in out
    assert "fallback = true" in out


def test_check_runs_the_suite(small_config, tmp_path, capsys):
    code = main(
        ["check", "--config", str(small_config), "--out-dir", str(tmp_path), "--monty-n", "2000", "--t-trials", "4000", "--tolerance", "t.critical=0.001"]
    )
    assert code in (EXIT_OK, EXIT_FAILURE)
    out = capsys.readouterr().out
    assert "| propriety.grid |" in out
    assert "| monty.exact_switch |" in out
    assert (tmp_path / MANIFEST_JSON).exists()


def test_internal_value_errors_are_not_config_errors(small_config, tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise ValueError("lower bound above upper bound")

    monkeypatch.setattr("coverage_forecast.main.run_submarine", broken)
    with pytest.raises(ValueError, match="lower bound above upper bound"):
        main(["submarine", "--config", str(small_config), "--out-dir", str(tmp_path)])


def test_monty_rejects_zero_games():
    with pytest.raises(SystemExit) as excinfo:
        main(["monty", "--n", "0"])
    assert excinfo.value.code == EXIT_CONFIG


def test_forecast_rejects_bad_alpha(submarine_out):
    assert main(["forecast", str(submarine_out / TABLES_CSV), "--statistic-value", "0.2", "--alpha", "1.5"]) == EXIT_CONFIG


def test_forecast_rejects_foreign_csv(tmp_path):
    path = tmp_path / "tables.csv"
    path.write_text("stat,proc\nD,np\n")
    assert main(["forecast", str(path), "--statistic-value", "0.2"]) == EXIT_FAILURE
