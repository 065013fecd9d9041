import pytest

from coverage_forecast.config import RunConfig
from coverage_forecast.experiment import run_submarine
from coverage_forecast.model import SimulationConfig
from coverage_forecast.simulation import STREAM_EVALUATE, STREAM_TRAIN, TrialBatch, run_sweep


@pytest.fixture(scope="session")
def sweep_config() -> SimulationConfig:
    """Four configurations, 50k trials each."""
    return SimulationConfig(theta_grid=[0.0, 3.0], hull_width_grid=[10.0, 40.0], n_trials=50_000, seed=11, chunk_size=8192)


@pytest.fixture(scope="session")
def train_batches(sweep_config) -> list[TrialBatch]:
    return list(run_sweep(sweep_config, stream=STREAM_TRAIN))


@pytest.fixture(scope="session")
def evaluate_batches(sweep_config) -> list[TrialBatch]:
    return list(run_sweep(sweep_config, stream=STREAM_EVALUATE))


@pytest.fixture(scope="session")
def train_batch(train_batches) -> TrialBatch:
    return TrialBatch.concat(train_batches)


@pytest.fixture(scope="session")
def tiny_run_config(tmp_path_factory) -> RunConfig:
    return RunConfig(
        theta_grid=[0.0, 2.0],
        hull_width_grid=[10.0, 20.0],
        n_trials=6000,
        seed=5,
        chunk_size=2048,
        bins_d=20,
        bins_w=10,
        min_occupancy=50,
        out_dir=tmp_path_factory.mktemp("tiny"),
    )


@pytest.fixture(scope="session")
def tiny_report(tiny_run_config):
    return run_submarine(tiny_run_config, include_oracle=True)
