"""
Flight-log validation against autopilot-style references.

References come from body-frame velocity under a zero-wind assumption, so they
are comparison baselines rather than ground truth.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from typing import NamedTuple

import numpy as np
import pandas as pd
from loguru import logger
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import (
    ForwardSpeedTooLowError,
    MissingColumnsError,
    NonMonotonicTimeError,
    TooShortError,
)
from app.core.estimate import estimate_arrays
from app.core.model import N_CHANNELS, BodyVelocity, CalibrationBundle
from app.core.preprocess import DEFAULT_CUTOFF_HZ

DEFAULT_VX_MIN = 1.0
DEFAULT_ALIGN_TOL = 0.05
DP_COLUMNS = tuple(f"dp{i + 1}" for i in range(N_CHANNELS))
REQUIRED_COLUMNS = ("t", *DP_COLUMNS, "vx", "vy", "vz")
PITOT_COLUMN = "pitot_mps"
MANEUVER_COLUMN = "maneuver"
ZERO_WIND_BANNER = (
    "WARNING: reference airspeed and angles are derived from body-frame velocity and are only "
    "valid in the absence of wind; they are comparison baselines, not ground truth."
)


def reference_angles(v: BodyVelocity, vx_min: float = DEFAULT_VX_MIN) -> tuple[float, float]:
    """(alpha, beta) in degrees: atan(vz / vx) and atan(vy / vx)."""
    if not v.vx > vx_min:
        msg = f"forward speed vx = {v.vx:g} m/s must exceed {vx_min:g} m/s"
        raise ForwardSpeedTooLowError(msg)
    return math.degrees(math.atan(v.vz / v.vx)), math.degrees(math.atan(v.vy / v.vx))


def reference_arrays(
    vx: ArrayLike, vy: ArrayLike, vz: ArrayLike, vx_min: float = DEFAULT_VX_MIN
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Vectorized references (speed, alpha, beta); rows with vx <= vx_min are NaN."""
    x, y, z = (np.asarray(c, dtype=np.float64) for c in (vx, vy, vz))
    valid = x > vx_min
    safe = np.where(valid, x, np.nan)
    alpha = np.degrees(np.arctan(z / safe))
    beta = np.degrees(np.arctan(y / safe))
    speed = np.where(valid, np.sqrt(x * x + y * y + z * z), np.nan)
    return speed, alpha, beta


class Alignment(NamedTuple):
    a_index: NDArray[np.int64]
    b_index: NDArray[np.int64]
    dropped_a: int
    dropped_b: int

    @property
    def pairs(self) -> int:
        return len(self.a_index)


def _check_increasing(t: NDArray[np.float64], name: str) -> None:
    if np.any(np.diff(t) <= 0):
        msg = f"series {name} timestamps must strictly increase"
        raise NonMonotonicTimeError(msg)


def align_series(a: ArrayLike, b: ArrayLike, tol: float = DEFAULT_ALIGN_TOL) -> Alignment:
    """
    Pair each sample of `a` with the nearest sample of `b` within `tol` seconds.

    A `b` sample claimed by several `a` samples stays with the closest one;
    everything left unpaired is dropped and counted.
    """
    ta = np.asarray(a, dtype=np.float64).reshape(-1)
    tb = np.asarray(b, dtype=np.float64).reshape(-1)
    _check_increasing(ta, "a")
    _check_increasing(tb, "b")
    if not len(ta) or not len(tb):
        empty = np.empty(0, dtype=np.int64)
        return Alignment(empty, empty, len(ta), len(tb))

    left = pd.DataFrame({"t": ta, "ia": np.arange(len(ta))})
    right = pd.DataFrame({"t_b": tb, "ib": np.arange(len(tb))})
    merged = pd.merge_asof(
        left, right, left_on="t", right_on="t_b", direction="nearest", tolerance=tol
    ).dropna(subset=["ib"])
    merged["gap"] = (merged["t"] - merged["t_b"]).abs()
    merged = merged.sort_values(["ib", "gap", "ia"], kind="mergesort").drop_duplicates("ib", keep="first")
    merged = merged.sort_values("ia", kind="mergesort")

    ia = merged["ia"].to_numpy(dtype=np.int64)
    ib = merged["ib"].to_numpy(dtype=np.int64)
    return Alignment(ia, ib, len(ta) - len(ia), len(tb) - len(ib))


class FlightErrors(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    airspeed_vs_reference: float | None
    airspeed_vs_pitot: float | None = None
    pitot_vs_reference: float | None = None
    aoa: float | None
    aos: float | None


class ValidationReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    banner: str = ZERO_WIND_BANNER
    n_rows: int
    n_paired: int
    mpp_gaps: int
    reference_invalid: int
    unpaired_mpp: int
    unpaired_reference: int
    sample_rate_hz: float
    cutoff_hz: float
    has_pitot: bool
    overall: FlightErrors
    per_maneuver: dict[str, FlightErrors] = Field(default_factory=dict)
    notes: tuple[str, ...] = ()
    series: pd.DataFrame = Field(exclude=True, repr=False)


def _mae(a: pd.Series, b: pd.Series) -> float | None:
    diff = (a - b).dropna()
    return float(diff.abs().mean()) if len(diff) else None


def _errors(paired: pd.DataFrame, has_pitot: bool) -> FlightErrors:
    return FlightErrors(
        n=len(paired),
        airspeed_vs_reference=_mae(paired["mpp_airspeed"], paired["ref_airspeed"]),
        airspeed_vs_pitot=_mae(paired["mpp_airspeed"], paired["pitot_airspeed"]) if has_pitot else None,
        pitot_vs_reference=_mae(paired["pitot_airspeed"], paired["ref_airspeed"]) if has_pitot else None,
        aoa=_mae(paired["mpp_aoa"], paired["ref_aoa"]),
        aos=_mae(paired["mpp_aos"], paired["ref_aos"]),
    )


def infer_sample_rate(t: ArrayLike) -> float:
    times = np.asarray(t, dtype=np.float64)
    if len(times) < 2:
        msg = "need at least 2 rows to infer the sample rate"
        raise TooShortError(msg)
    return float(1.0 / np.median(np.diff(times)))


def check_columns(frame: pd.DataFrame, required: Sequence[str] = REQUIRED_COLUMNS) -> None:
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise MissingColumnsError(missing)


def validate(
    bundle: CalibrationBundle,
    log: pd.DataFrame,
    fs: float | None = None,
    fc: float = DEFAULT_CUTOFF_HZ,
    vx_min: float = DEFAULT_VX_MIN,
    tol: float = DEFAULT_ALIGN_TOL,
) -> ValidationReport:
    check_columns(log)
    t = log["t"].to_numpy(dtype=np.float64)
    _check_increasing(t, "log")
    rate = fs if fs is not None else infer_sample_rate(t)
    has_pitot = PITOT_COLUMN in log.columns
    notes: list[str] = []
    if not has_pitot:
        notes.append("no pitot column: airspeed compared to the velocity reference only")

    outputs = estimate_arrays(bundle, t, log[list(DP_COLUMNS)].to_numpy(dtype=np.float64), rate, fc)
    gap = np.array([o.gap for o in outputs], dtype=bool)
    mpp = np.array(
        [(math.nan,) * 3 if o.state is None else o.state.as_tuple() for o in outputs], dtype=np.float64
    ).reshape(len(outputs), 3)
    ref_speed, ref_aoa, ref_aos = reference_arrays(log["vx"], log["vy"], log["vz"], vx_min)
    ref_ok = np.isfinite(ref_speed)

    mpp_rows = np.flatnonzero(~gap)
    ref_rows = np.flatnonzero(ref_ok)
    alignment = align_series(t[mpp_rows], t[ref_rows], tol)
    a_rows = mpp_rows[alignment.a_index]
    b_rows = ref_rows[alignment.b_index]

    series = pd.DataFrame(
        {
            "t": t,
            "mpp_airspeed": mpp[:, 0],
            "mpp_aoa": mpp[:, 1],
            "mpp_aos": mpp[:, 2],
            "ref_airspeed": ref_speed,
            "ref_aoa": ref_aoa,
            "ref_aos": ref_aos,
            "pitot_airspeed": log[PITOT_COLUMN].to_numpy(dtype=np.float64) if has_pitot else np.nan,
            "maneuver": log[MANEUVER_COLUMN].astype(str).to_numpy() if MANEUVER_COLUMN in log.columns else "",
            "gap": gap,
            "paired": False,
        }
    )
    paired = pd.DataFrame(
        {
            "mpp_airspeed": mpp[a_rows, 0],
            "mpp_aoa": mpp[a_rows, 1],
            "mpp_aos": mpp[a_rows, 2],
            "ref_airspeed": ref_speed[b_rows],
            "ref_aoa": ref_aoa[b_rows],
            "ref_aos": ref_aos[b_rows],
            "pitot_airspeed": series["pitot_airspeed"].to_numpy()[a_rows],
            "maneuver": series["maneuver"].to_numpy()[a_rows],
        }
    )
    series.loc[a_rows, "paired"] = True

    per_maneuver = {}
    if MANEUVER_COLUMN in log.columns:
        for tag, group in paired.groupby("maneuver", sort=True):
            per_maneuver[str(tag)] = _errors(group, has_pitot)

    overall = _errors(paired, has_pitot)
    logger.warning(ZERO_WIND_BANNER)
    logger.info(
        f"flight validation: {alignment.pairs} paired of {len(t)} rows, airspeed MAE "
        f"{overall.airspeed_vs_reference}, aoa MAE {overall.aoa}, aos MAE {overall.aos}"
    )
    return ValidationReport(
        n_rows=len(t),
        n_paired=alignment.pairs,
        mpp_gaps=int(np.count_nonzero(gap)),
        reference_invalid=int(np.count_nonzero(~ref_ok)),
        unpaired_mpp=alignment.dropped_a,
        unpaired_reference=alignment.dropped_b,
        sample_rate_hz=rate,
        cutoff_hz=fc,
        has_pitot=has_pitot,
        overall=overall,
        per_maneuver=per_maneuver,
        notes=tuple(notes),
        series=series,
    )
