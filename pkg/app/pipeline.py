"""
File-to-file workflows shared by the command line and the background workers.

Each function reads its inputs, runs one core operation and writes its outputs
atomically, returning the in-memory result together with the written paths.
"""
from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path
from typing import NamedTuple

from loguru import logger

from app.core.calibrate import AccuracyReport, FitConfig, calibrate
from app.core.design_eval import DesignReport, compare_designs
from app.core.estimate import StreamOutput, estimate_arrays
from app.core.flight import DP_COLUMNS, ValidationReport, validate
from app.core.model import CalibrationBundle
from app.core.preprocess import assemble_dataset
from app.core.synth import (
    DEFAULT_DURATION_S,
    DEFAULT_SAMPLE_RATE_HZ,
    DEFAULT_SPEEDS,
    OracleConfig,
    generate_design_matrix,
    generate_flight_log,
    generate_grid,
)
from app.formats.bundle import save_bundle
from app.formats.common import build_time, file_digest, read_csv, sibling, write_csv, write_report
from app.formats.design import metrics_frame, read_design_matrix, write_design_matrix
from app.formats.flight import read_flight_log, write_estimates, write_flight_log
from app.formats.runs import RUN_COLUMNS, load_runs, write_grid
from app.services.deps import get_bundle_service, get_settings_service
from app.services.settings.base import Settings


def _settings(settings: Settings | None) -> Settings:
    return settings if settings is not None else get_settings_service().settings


def run_synth_grid(
    out_dir: str | Path,
    cfg: OracleConfig,
    speeds: Sequence[float] = DEFAULT_SPEEDS,
    duration: float = DEFAULT_DURATION_S,
    fs: float = DEFAULT_SAMPLE_RATE_HZ,
    settings: Settings | None = None,
    angle_grid: Sequence[tuple[float, float]] | None = None,
) -> Path:
    runs = generate_grid(
        cfg, speeds, angle_grid, duration=duration, fs=fs, max_workers=_settings(settings).max_workers
    )
    return write_grid(runs, out_dir)


def run_synth_design(out: str | Path, base: OracleConfig, samples: int, speeds: Sequence[float] | None = None) -> Path:
    if speeds is None:
        matrix = generate_design_matrix(samples=samples, base=base)
    else:
        matrix = generate_design_matrix(speeds=speeds, samples=samples, base=base)
    return write_design_matrix(matrix, out)


def run_synth_flight(
    out: str | Path, cfg: OracleConfig, maneuvers: Sequence[str], fs: float, include_pitot: bool = True
) -> Path:
    return write_flight_log(generate_flight_log(cfg, maneuvers, fs=fs, include_pitot=include_pitot), out)


class CalibrationOutcome(NamedTuple):
    bundle: CalibrationBundle
    report: AccuracyReport
    bundle_path: Path
    report_path: Path


def run_calibrate(
    manifest: str | Path,
    out: str | Path,
    cfg: FitConfig,
    fc: float | None = None,
    report_path: str | Path | None = None,
    settings: Settings | None = None,
) -> CalibrationOutcome:
    settings = _settings(settings)
    runs, digests = load_runs(manifest)
    dataset = assemble_dataset(
        runs,
        fc if fc is not None else settings.cutoff_hz,
        cfg.q_min,
        cfg.envelope,
        settings.max_workers,
    )
    bundle, report = calibrate(
        dataset,
        cfg,
        created_at=build_time(settings.source_date_epoch),
        input_digests=digests,
    )
    bundle_path = save_bundle(bundle, out)
    target = Path(report_path) if report_path is not None else sibling(out, ".report.json")
    written = write_report("calibration", report, target, seed=cfg.seed, inputs=digests)
    get_bundle_service().invalidate(bundle_path)
    logger.info(f"wrote {bundle_path} and {written}")
    return CalibrationOutcome(bundle, report, bundle_path, written)


def run_estimate(
    model: str | Path,
    input_csv: str | Path,
    out: str | Path,
    fs: float,
    fc: float | None = None,
    settings: Settings | None = None,
) -> tuple[list[StreamOutput], Path]:
    settings = _settings(settings)
    bundle = get_bundle_service().get(model)
    frame = read_csv(input_csv, RUN_COLUMNS)
    outputs = estimate_arrays(
        bundle,
        frame["t"].to_numpy(dtype=float),
        frame[list(DP_COLUMNS)].to_numpy(dtype=float),
        fs,
        fc if fc is not None else settings.cutoff_hz,
    )
    path = write_estimates(outputs, out)
    logger.info(f"estimated {len(outputs)} frames ({sum(o.gap for o in outputs)} gaps) into {path}")
    return outputs, path


def run_design_eval(
    matrix_csv: str | Path, out: str | Path, settings: Settings | None = None
) -> tuple[DesignReport, Path, Path]:
    matrix = read_design_matrix(matrix_csv)
    report = compare_designs(matrix, _settings(settings).max_workers)
    path = write_report("design-eval", report, out, inputs={Path(matrix_csv).name: file_digest(matrix_csv)})
    metrics = write_csv(metrics_frame(report), sibling(out, ".metrics.csv"))
    return report, path, metrics


def run_flight_validate(
    model: str | Path,
    log_csv: str | Path,
    out: str | Path,
    fs: float | None = None,
    fc: float | None = None,
    settings: Settings | None = None,
) -> tuple[ValidationReport, Path, Path]:
    settings = _settings(settings)
    bundle = get_bundle_service().get(model)
    report = validate(
        bundle,
        read_flight_log(log_csv),
        fs=fs,
        fc=fc if fc is not None else settings.cutoff_hz,
        vx_min=settings.vx_min,
        tol=settings.align_tol,
    )
    inputs = {"model": file_digest(model), "log": file_digest(log_csv)}
    path = write_report("flight-validate", report, out, seed=bundle.metadata.seed, inputs=inputs)
    series = write_csv(report.series, sibling(out, ".series.csv"))
    return report, path, series
