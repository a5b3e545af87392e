"""
Long-format design matrix CSV:
`design_id,tip,spacing_mm,speed_mps,aoa_deg,aos_deg,sensor,sample_idx,dp_pa`.

An empty `dp_pa` cell is an explicit missing marker; cells absent from the file
make the tensor ragged.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from app.core.design_eval import DesignMatrix, DesignMetric, DesignReport, DesignSpec
from app.core.errors import RaggedTensorError, SchemaError
from app.core.model import N_CHANNELS
from app.formats.common import read_csv, write_csv

DESIGN_COLUMNS = ("design_id", "tip", "spacing_mm", "speed_mps", "aoa_deg", "aos_deg", "sensor", "sample_idx", "dp_pa")


def design_frame(matrix: DesignMatrix) -> pd.DataFrame:
    n_designs, n_speeds, n_sensors, n_angles, n_samples = matrix.shape
    d, s, c, a, k = np.meshgrid(
        np.arange(n_designs), np.arange(n_speeds), np.arange(n_sensors), np.arange(n_angles), np.arange(n_samples),
        indexing="ij",
    )
    d, s, c, a, k = (axis.reshape(-1) for axis in (d, s, c, a, k))
    return pd.DataFrame(
        {
            "design_id": np.array([x.design_id for x in matrix.designs], dtype=object)[d],
            "tip": np.array([x.tip for x in matrix.designs], dtype=object)[d],
            "spacing_mm": np.array([x.spacing_mm for x in matrix.designs])[d],
            "speed_mps": matrix.speeds[s],
            "aoa_deg": matrix.angles[a, 0],
            "aos_deg": matrix.angles[a, 1],
            "sensor": c + 1,
            "sample_idx": k,
            "dp_pa": matrix.tensor.reshape(-1),
        }
    )


def write_design_matrix(matrix: DesignMatrix, path: str | Path) -> Path:
    return write_csv(design_frame(matrix), path)


def read_design_matrix(path: str | Path) -> DesignMatrix:
    frame = read_csv(path, DESIGN_COLUMNS)
    if frame.empty:
        msg = f"{path}: design matrix holds no rows"
        raise RaggedTensorError(msg)

    specs = frame.drop_duplicates("design_id")[["design_id", "tip", "spacing_mm"]]
    if len(frame.drop_duplicates(["design_id", "tip", "spacing_mm"])) != len(specs):
        msg = f"{path}: a design id maps to more than one tip/spacing"
        raise SchemaError(msg)
    try:
        designs = tuple(
            DesignSpec(design_id=str(r.design_id), tip=r.tip, spacing_mm=float(r.spacing_mm))
            for r in specs.itertuples(index=False)
        )
    except ValueError as exc:
        msg = f"{path}: invalid design description ({exc})"
        raise SchemaError(msg) from exc

    design_code = pd.Categorical(frame["design_id"].astype(str), categories=[d.design_id for d in designs]).codes
    speeds, speed_code = np.unique(frame["speed_mps"].to_numpy(dtype=np.float64), return_inverse=True)
    angle_pairs = frame[["aoa_deg", "aos_deg"]].to_numpy(dtype=np.float64)
    angles, angle_code = np.unique(angle_pairs, axis=0, return_inverse=True)
    sensor = frame["sensor"].to_numpy(dtype=np.int64) - 1
    sample = frame["sample_idx"].to_numpy(dtype=np.int64)
    if np.any((sensor < 0) | (sensor >= N_CHANNELS)) or np.any(sample < 0):
        msg = f"{path}: sensor must lie in 1..{N_CHANNELS} and sample_idx must be >= 0"
        raise SchemaError(msg)

    n_samples = int(sample.max()) + 1
    shape = (len(designs), len(speeds), N_CHANNELS, len(angles), n_samples)
    flat = np.ravel_multi_index((design_code, speed_code.reshape(-1), sensor, angle_code.reshape(-1), sample), shape)
    if len(np.unique(flat)) != len(flat):
        msg = f"{path}: duplicate design matrix cells"
        raise RaggedTensorError(msg)
    if len(flat) != int(np.prod(shape)):
        msg = f"{path}: {len(flat)} rows cannot fill a {shape} tensor; mark missing cells with an empty dp_pa"
        raise RaggedTensorError(msg)

    tensor = np.empty(int(np.prod(shape)), dtype=np.float64)
    tensor[flat] = frame["dp_pa"].to_numpy(dtype=np.float64)
    return DesignMatrix(designs=designs, speeds=speeds, angles=angles, tensor=tensor.reshape(shape))


def metrics_frame(report: DesignReport) -> pd.DataFrame:
    rows = [
        {
            "design_id": spec.design_id,
            "tip": spec.tip,
            "spacing_mm": spec.spacing_mm,
            "metric": metric.value,
            "value": report.metrics[spec.design_id][metric],
        }
        for spec in report.designs
        for metric in DesignMetric
    ]
    return pd.DataFrame(rows, columns=["design_id", "tip", "spacing_mm", "metric", "value"])
