from datetime import datetime, timezone
from pathlib import Path

import pytest

from app.core.calibrate import AccuracyReport, FitConfig, calibrate
from app.core.model import CalibrationBundle, CalibrationDataset, CalibrationRun
from app.core.preprocess import assemble_dataset
from app.core.synth import OracleConfig, generate_grid, square_angle_grid
from app.formats.bundle import save_bundle
from app.services.manager import service_manager

FIXED_TIME = datetime(2024, 1, 1, tzinfo=timezone.utc)
GRID_SPEEDS = (3.0, 9.0, 15.0, 21.0, 27.0)
FLIGHT_SPEEDS = (6.0, 9.0, 12.0, 15.0)


@pytest.fixture(scope="session")
def oracle() -> OracleConfig:
    return OracleConfig(noise_sigma=0.2, seed=42)


@pytest.fixture(scope="session")
def grid_runs(oracle: OracleConfig) -> list[CalibrationRun]:
    """5 speeds x 17 angle configurations, 2 s at 33 Hz."""
    return generate_grid(oracle, GRID_SPEEDS, duration=2.0, fs=33.0)


@pytest.fixture(scope="session")
def grid_dataset(grid_runs: list[CalibrationRun]) -> CalibrationDataset:
    return assemble_dataset(grid_runs)


@pytest.fixture(scope="session")
def calibrated(grid_dataset: CalibrationDataset) -> tuple[CalibrationBundle, AccuracyReport]:
    return calibrate(grid_dataset, FitConfig(degree=3), created_at=FIXED_TIME)


@pytest.fixture(scope="session")
def bundle(calibrated: tuple[CalibrationBundle, AccuracyReport]) -> CalibrationBundle:
    return calibrated[0]


@pytest.fixture(scope="session")
def flight_bundle() -> CalibrationBundle:
    """Dense 9 x 9 square grid, so off-axis flight states are interpolated rather than extrapolated."""
    cfg = OracleConfig(noise_sigma=0.1, seed=7)
    runs = generate_grid(cfg, FLIGHT_SPEEDS, square_angle_grid(35.0, 9), duration=1.0, fs=33.0)
    bundle, _ = calibrate(assemble_dataset(runs), FitConfig(degree=4, augment=False), created_at=FIXED_TIME)
    return bundle


@pytest.fixture
def bundle_file(bundle: CalibrationBundle, tmp_path: Path) -> Path:
    return save_bundle(bundle, tmp_path / "bundle.json")


@pytest.fixture
def fresh_services():
    """Drop every cached service before and after the test."""
    service_manager.services = {}
    service_manager.register_factories()
    yield service_manager
    service_manager.services = {}
    service_manager.register_factories()
