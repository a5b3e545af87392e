"""Run CSV files (`t,dp1..dp5`) and the JSON manifest that labels them."""
from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.core.errors import EmptyInputError, SchemaError
from app.core.flight import DP_COLUMNS
from app.core.model import CalibrationRun, FlowState
from app.formats.common import SCHEMA_VERSION, atomic_write_text, file_digest, read_csv, write_csv

RUN_COLUMNS = ("t", *DP_COLUMNS)


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    file: str
    speed_mps: float = Field(ge=0)
    aoa_deg: float
    aos_deg: float
    sample_rate_hz: float = Field(gt=0)


class Manifest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    runs: list[ManifestEntry]


def run_frame(run: CalibrationRun) -> pd.DataFrame:
    frame = pd.DataFrame({"t": run.t})
    for i, column in enumerate(DP_COLUMNS):
        frame[column] = run.dp[:, i]
    return frame


def write_run(run: CalibrationRun, path: str | Path) -> Path:
    return write_csv(run_frame(run), path)


def read_run(path: str | Path, entry: ManifestEntry) -> CalibrationRun:
    frame = read_csv(path, RUN_COLUMNS)
    state = FlowState(airspeed=entry.speed_mps, aoa=entry.aoa_deg, aos=entry.aos_deg)
    return CalibrationRun(
        true_state=state,
        sample_rate=entry.sample_rate_hz,
        t=frame["t"].to_numpy(dtype=np.float64),
        dp=frame[list(DP_COLUMNS)].to_numpy(dtype=np.float64),
        source=entry.file,
    )


def write_grid(runs: Sequence[CalibrationRun], out_dir: str | Path, run_dir: str = "runs") -> Path:
    """Write every run as CSV plus `manifest.json`; returns the manifest path."""
    root = Path(out_dir)
    entries = []
    for i, run in enumerate(runs):
        name = f"{run_dir}/{run.source or f'run_{i:04d}'}.csv"
        write_run(run, root / name)
        entries.append(
            ManifestEntry(
                file=name,
                speed_mps=run.true_state.airspeed,
                aoa_deg=run.true_state.aoa,
                aos_deg=run.true_state.aos,
                sample_rate_hz=run.sample_rate,
            )
        )
    manifest = root / "manifest.json"
    atomic_write_text(manifest, Manifest(runs=entries).model_dump_json(indent=2) + "\n")
    logger.info(f"wrote {len(entries)} runs and {manifest}")
    return manifest


def read_manifest(path: str | Path) -> Manifest:
    source = Path(path)
    try:
        manifest = Manifest.model_validate_json(source.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        msg = f"{source}: manifest not found"
        raise EmptyInputError(msg) from exc
    except ValidationError as exc:
        msg = f"{source}: invalid manifest ({exc.error_count()} errors): {exc.errors()[0]['msg']}"
        raise SchemaError(msg) from exc
    if manifest.schema_version != SCHEMA_VERSION:
        msg = f"{source}: manifest schema_version {manifest.schema_version} is not supported"
        raise SchemaError(msg)
    return manifest


def load_runs(path: str | Path) -> tuple[list[CalibrationRun], dict[str, str]]:
    """Read a manifest and its runs; digests cover the manifest and every run file."""
    source = Path(path)
    manifest = read_manifest(source)
    runs, digests = [], {source.name: file_digest(source)}
    for entry in manifest.runs:
        run_path = source.parent / entry.file
        runs.append(read_run(run_path, entry))
        digests[entry.file] = file_digest(run_path)
    logger.debug(f"loaded {len(runs)} runs from {source}")
    return runs, digests
