from typing import Any

from loguru import logger

from app.core.calibrate import FitConfig
from app.pipeline import run_calibrate, run_flight_validate
from app.services.deps import get_settings_service
from celery_tasks.celery import celery_app as app


@app.task
def calibrate_manifest(
    manifest: str,
    out: str,
    degree: int | str = "auto",
    seed: int = 42,
    augment: bool = True,
    split: float = 0.7,
) -> dict[str, Any]:
    settings = get_settings_service().settings
    cfg = FitConfig(
        degree=degree,
        seed=seed,
        augment=augment,
        split_ratio=split,
        rho_ref=settings.rho_ref,
        q_min=settings.q_min,
        max_workers=settings.max_workers,
    )
    logger.info(f"calibrating {manifest} -> {out}")
    outcome = run_calibrate(manifest, out, cfg, settings=settings)
    return {
        "degree": outcome.bundle.degree,
        "airspeed_mae": outcome.report.airspeed.mae,
        "aoa_mae": outcome.report.aoa.mae,
        "aos_mae": outcome.report.aos.mae,
        "bundle": str(outcome.bundle_path),
        "report": str(outcome.report_path),
    }


@app.task
def validate_flight(model: str, log: str, out: str) -> dict[str, Any]:
    logger.info(f"validating {log} against {model}")
    report, path, series = run_flight_validate(model, log, out)
    return {
        "n_paired": report.n_paired,
        "overall": report.overall.model_dump(),
        "report": str(path),
        "series": str(series),
    }
