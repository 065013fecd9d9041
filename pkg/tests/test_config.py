try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import pytest
from pydantic import ValidationError

from coverage_forecast.config import RunConfig, default_out_dir, load_run_config, read_config_file
from coverage_forecast.constants import OUT_DIR_ENV
from coverage_forecast.model import SimulationConfig
from coverage_forecast.scoring import ScoringRuleKind

CONFIGS = Path(__file__).parent.parent / "configs"


def write_toml(tmp_path, text):
    path = tmp_path / "run.toml"
    path.write_text(text)
    return path


def test_defaults():
    config = RunConfig()
    assert config.bins_d == 50
    assert config.bins_w == 25
    assert config.rule is ScoringRuleKind.BRIER
    assert config.threads == 1
    assert len(config.designs()) == 100


def test_out_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path))
    assert default_out_dir() == tmp_path
    assert RunConfig().out_dir == tmp_path


def test_out_dir_default(monkeypatch):
    monkeypatch.delenv(OUT_DIR_ENV, raising=False)
    assert default_out_dir() == Path("output")


def test_shipped_configs_load():
    smoke = load_run_config(CONFIGS / "smoke.toml")
    assert smoke.theta_grid == [0.0, 5.0]
    assert smoke.procedures == ["np", "ump", "sd"]
    assert smoke.out_dir == Path("output/smoke")
    full = load_run_config(CONFIGS / "submarine.toml")
    assert len(full.designs()) == 100


def test_overrides_win_over_file(tmp_path):
    path = write_toml(tmp_path, "seed = 3\nn_trials = 1000\n")
    config = load_run_config(path, {"seed": 9, "n_trials": None, "rule": "log"})
    assert config.seed == 9
    assert config.n_trials == 1000
    assert config.rule is ScoringRuleKind.LOG


def test_simulation_part(tmp_path):
    config = load_run_config(write_toml(tmp_path, "seed = 3\nbins_d = 10\n"))
    simulation = config.simulation()
    assert type(simulation) is SimulationConfig
    assert simulation.seed == 3
    assert simulation.designs() == config.designs()


def test_unknown_key_is_rejected(tmp_path):
    with pytest.raises(ValidationError):
        load_run_config(write_toml(tmp_path, "seeds = 3\n"))


def test_nested_table_is_rejected(tmp_path):
    with pytest.raises(ValueError):
        read_config_file(write_toml(tmp_path, "[sweep]\nseed = 3\n"))


def test_unknown_procedure_is_rejected():
    with pytest.raises(ValidationError):
        RunConfig(procedures=["np", "bootstrap"])


def test_odd_chunk_size_is_rejected(tmp_path):
    with pytest.raises(ValidationError):
        load_run_config(write_toml(tmp_path, "chunk_size = 999\n"))


def test_malformed_toml(tmp_path):
    with pytest.raises(tomllib.TOMLDecodeError):
        load_run_config(write_toml(tmp_path, "seed = = 3\n"))
