"""
Forward model of the probe: flow state in, differential pressures out.

Each port sees q_dyn * max(0, u.n)^e where u is the flow direction, n the port
direction and e = 4 / sharpness, so a sharper tip decays more slowly off axis.
It stands in for the wind tunnel in tests, demos and design studies.
"""
from __future__ import annotations

from collections.abc import Sequence
from typing import Any, Literal

import numpy as np
import pandas as pd
from loguru import logger
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.design_eval import (
    DEFAULT_DESIGN_SAMPLES,
    DEFAULT_DESIGN_SPEEDS,
    DesignMatrix,
    DesignSpec,
    TipShape,
    default_design_angles,
    default_designs,
)
from app.core.errors import AngleOutOfRangeError, DataValidationError
from app.core.layout import N_PORTS, ProbePortLayout
from app.core.model import FULL_SCALE_PA, MIN_RUN_FRAMES, N_CHANNELS, CalibrationRun, FlowState, PressureFrame
from app.util.concurrency import ordered_map

TIP_SHARPNESS: dict[str, float] = {"cone": 2.0, "sphere": 1.5}
DEFAULT_SPEEDS = tuple(float(v) for v in range(3, 28, 3))
DEFAULT_DURATION_S = 20.0
DEFAULT_SAMPLE_RATE_HZ = 33.0

_CENTER = 0
_PERIPHERAL = slice(1, 9)
_STATIC = slice(9, 13)


class OracleConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    layout: ProbePortLayout = ProbePortLayout()
    rho: float = Field(default=1.225, gt=0)
    tip: TipShape = "cone"
    sharpness: float = Field(default=2.0, gt=0)
    noise_sigma: float = Field(default=0.0, ge=0)
    full_scale_clip: bool = False
    seed: int = 42

    @model_validator(mode="before")
    @classmethod
    def _sharpness_from_tip(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("sharpness") is None:
            data = {**data, "sharpness": TIP_SHARPNESS[data.get("tip", "cone")]}
        return data

    @property
    def decay_exponent(self) -> float:
        return 4.0 / self.sharpness


def default_calibration_angles(inner: float = 17.5, outer: float = 35.0) -> list[tuple[float, float]]:
    """17 configurations: center plus the axes and diagonals at two radii."""
    grid = [(0.0, 0.0)]
    for r in (inner, outer):
        for aoa, aos in ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)):
            grid.append((aoa * r, aos * r))
    return grid


def square_angle_grid(limit: float = 35.0, steps: int = 9) -> list[tuple[float, float]]:
    axis = np.linspace(-limit, limit, steps)
    return [(float(aoa), float(aos)) for aoa in axis for aos in axis]


def flow_unit_vectors(aoa: ArrayLike, aos: ArrayLike) -> NDArray[np.float64]:
    """(N, 3) flow directions normalize(1, tan aos, tan aoa); angles in degrees, |angle| < 90."""
    a = np.atleast_1d(np.asarray(aoa, dtype=np.float64))
    b = np.atleast_1d(np.asarray(aos, dtype=np.float64))
    if np.any(np.abs(a) >= 90.0) or np.any(np.abs(b) >= 90.0) or not np.all(np.isfinite(a) & np.isfinite(b)):
        msg = "flow angles must be finite and strictly inside ±90°"
        raise AngleOutOfRangeError(msg)
    a, b = np.broadcast_arrays(a, b)
    raw = np.stack([np.ones_like(a), np.tan(np.radians(b)), np.tan(np.radians(a))], axis=-1)
    return raw / np.linalg.norm(raw, axis=-1, keepdims=True)


def flow_unit_vector(aoa: float, aos: float) -> NDArray[np.float64]:
    return flow_unit_vectors(aoa, aos)[0]


def port_pressure_rows(cfg: OracleConfig, speed: ArrayLike, aoa: ArrayLike, aos: ArrayLike) -> NDArray[np.float64]:
    v, a, b = np.broadcast_arrays(
        np.atleast_1d(np.asarray(speed, dtype=np.float64)),
        np.atleast_1d(np.asarray(aoa, dtype=np.float64)),
        np.atleast_1d(np.asarray(aos, dtype=np.float64)),
    )
    if np.any(v < 0):
        msg = "airspeed must be non-negative"
        raise DataValidationError(msg)
    u = flow_unit_vectors(a, b)
    n = cfg.layout.directions()
    # explicit sum keeps mirrored ports bit-identical
    cosine = u[:, 0:1] * n[:, 0] + u[:, 1:2] * n[:, 1] + u[:, 2:3] * n[:, 2]
    q_dyn = 0.5 * cfg.rho * v * v
    return q_dyn[:, np.newaxis] * np.maximum(cosine, 0.0) ** cfg.decay_exponent


def port_pressures(cfg: OracleConfig, speed: float, aoa: float, aos: float) -> NDArray[np.float64]:
    """13 port pressures: center, peripheral 0..7, static ring 0..3."""
    return port_pressure_rows(cfg, speed, aoa, aos)[0]


def sensor_values(
    cfg: OracleConfig, ports: ArrayLike, rng: np.random.Generator | None = None
) -> NDArray[np.float64]:
    p = np.asarray(ports, dtype=np.float64).reshape(-1, N_PORTS)
    ring = p[:, _STATIC]
    static = ((ring[:, 0] + ring[:, 2]) + (ring[:, 1] + ring[:, 3])) / 4.0
    peripheral = p[:, _PERIPHERAL]
    dp = np.empty((len(p), N_CHANNELS), dtype=np.float64)
    dp[:, 0] = static - p[:, _CENTER]
    for sensor, (pos, neg) in enumerate(cfg.layout.sensor_pairs, start=1):
        dp[:, sensor] = peripheral[:, pos] - peripheral[:, neg]
    if cfg.noise_sigma > 0:
        gen = rng if rng is not None else np.random.default_rng(cfg.seed)
        dp = dp + gen.normal(0.0, cfg.noise_sigma, size=dp.shape)
    if cfg.full_scale_clip:
        dp = np.clip(dp, -FULL_SCALE_PA, FULL_SCALE_PA)
    return dp


def sensor_readings(
    cfg: OracleConfig, ports: ArrayLike, rng: np.random.Generator | None = None, t: float = 0.0
) -> PressureFrame:
    dp = sensor_values(cfg, ports, rng)[0]
    return PressureFrame(t=t, dp=tuple(dp.tolist()))


def _run_for(
    cfg: OracleConfig, state: FlowState, n_frames: int, fs: float, seed: np.random.SeedSequence, source: str
) -> CalibrationRun:
    rng = np.random.default_rng(seed)
    ports = port_pressure_rows(cfg, state.airspeed, state.aoa, state.aos)
    dp = sensor_values(cfg, np.repeat(ports, n_frames, axis=0), rng)
    t = np.arange(n_frames, dtype=np.float64) / fs
    return CalibrationRun(true_state=state, sample_rate=fs, t=t, dp=dp, source=source)


def generate_grid(
    cfg: OracleConfig,
    speeds: Sequence[float] = DEFAULT_SPEEDS,
    angle_grid: Sequence[tuple[float, float]] | None = None,
    duration: float = DEFAULT_DURATION_S,
    fs: float = DEFAULT_SAMPLE_RATE_HZ,
    max_workers: int | None = None,
) -> list[CalibrationRun]:
    """One run per (speed, angle) pair, speed-major; each run draws from its own spawned sub-seed."""
    angles = list(angle_grid) if angle_grid is not None else default_calibration_angles()
    if not speeds or not angles:
        msg = "speed and angle axes must be nonempty"
        raise DataValidationError(msg)
    n_frames = int(round(duration * fs))
    if n_frames < MIN_RUN_FRAMES:
        msg = f"duration {duration:g} s at {fs:g} Hz gives {n_frames} frames per run, at least {MIN_RUN_FRAMES} needed"
        raise DataValidationError(msg)
    states = [FlowState(airspeed=float(v), aoa=float(a), aos=float(b)) for v in speeds for a, b in angles]
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(states))
    jobs = list(zip(range(len(states)), states, seeds))
    runs = ordered_map(
        lambda job: _run_for(cfg, job[1], n_frames, fs, job[2], f"run_{job[0]:04d}"), jobs, max_workers
    )
    logger.info(f"synthesized {len(runs)} runs of {n_frames} frames ({cfg.tip}, sigma={cfg.noise_sigma:g} Pa)")
    return runs


def generate_design_matrix(
    designs: Sequence[DesignSpec] | None = None,
    speeds: Sequence[float] = DEFAULT_DESIGN_SPEEDS,
    angle_grid: Sequence[tuple[float, float]] | None = None,
    samples: int = DEFAULT_DESIGN_SAMPLES,
    base: OracleConfig | None = None,
    sharpness: dict[str, float] | None = None,
) -> DesignMatrix:
    """Fill the design tensor from the oracle; tips differ only through sharpness, spacing has no effect."""
    specs = tuple(designs) if designs is not None else default_designs()
    angles = np.asarray(angle_grid if angle_grid is not None else default_design_angles(), dtype=np.float64)
    base_cfg = base or OracleConfig()
    if not specs or not len(speeds) or not len(angles) or samples < 1:
        msg = "design matrix axes must be nonempty"
        raise DataValidationError(msg)
    tip_sharpness = {**TIP_SHARPNESS, **(sharpness or {})}

    speed_col = np.repeat(np.asarray(speeds, dtype=np.float64), len(angles))
    aoa_col = np.tile(angles[:, 0], len(speeds))
    aos_col = np.tile(angles[:, 1], len(speeds))
    seeds = np.random.SeedSequence(base_cfg.seed).spawn(len(specs))

    tensor = np.empty((len(specs), len(speeds), N_CHANNELS, len(angles), samples), dtype=np.float64)
    for i, (spec, seed) in enumerate(zip(specs, seeds)):
        cfg = base_cfg.model_copy(update={"tip": spec.tip, "sharpness": tip_sharpness[spec.tip]})
        clean_cfg = cfg.model_copy(update={"noise_sigma": 0.0, "full_scale_clip": False})
        clean = sensor_values(clean_cfg, port_pressure_rows(cfg, speed_col, aoa_col, aos_col))
        clean = clean.reshape(len(speeds), len(angles), N_CHANNELS).transpose(0, 2, 1)
        values = np.repeat(clean[..., np.newaxis], samples, axis=-1)
        if cfg.noise_sigma > 0:
            values = values + np.random.default_rng(seed).normal(0.0, cfg.noise_sigma, size=values.shape)
        if cfg.full_scale_clip:
            values = np.clip(values, -FULL_SCALE_PA, FULL_SCALE_PA)
        tensor[i] = values
    logger.info(f"synthesized design matrix {tensor.shape} ({tensor.size} cells)")
    return DesignMatrix(designs=specs, speeds=np.asarray(speeds, dtype=np.float64), angles=angles, tensor=tensor)


Maneuver = Literal["circle", "stall", "yaw"]
CRUISE_SPEED = 12.0
CRUISE_AOA = 4.0
MANEUVER_DURATION_S: dict[str, float] = {"circle": 20.0, "stall": 12.0, "yaw": 12.0}


def _maneuver_profile(kind: str, tau: NDArray[np.float64]) -> tuple[NDArray[np.float64], ...]:
    # every profile starts and ends at cruise so segments join continuously
    cruise = np.full_like(tau, CRUISE_SPEED)
    if kind == "circle":
        return cruise, CRUISE_AOA + 1.5 * np.sin(2 * np.pi * tau), 3.0 * np.sin(2 * np.pi * tau)
    if kind == "stall":
        lift = np.sin(np.pi * tau)
        return CRUISE_SPEED - 5.0 * lift, CRUISE_AOA + 22.0 * lift**2, np.zeros_like(tau)
    if kind == "yaw":
        return cruise, np.full_like(tau, CRUISE_AOA), 15.0 * np.sin(4 * np.pi * tau)
    msg = f"unknown maneuver {kind!r}"
    raise DataValidationError(msg)


def generate_flight_log(
    cfg: OracleConfig,
    maneuvers: Sequence[str] = ("circle", "stall", "yaw"),
    fs: float = 50.0,
    pitot_sigma: float = 0.05,
    include_pitot: bool = True,
) -> pd.DataFrame:
    """
    Zero-wind flight log: body velocity equals the air-relative velocity.

    The pitot column reads only the axial component V * u_x.
    """
    if not maneuvers:
        msg = "at least one maneuver is required"
        raise DataValidationError(msg)
    speed, aoa, aos, tags = [], [], [], []
    for kind in maneuvers:
        n = int(round(MANEUVER_DURATION_S.get(kind, 0.0) * fs))
        v, a, b = _maneuver_profile(kind, np.arange(n, dtype=np.float64) / max(n, 1))
        speed.append(v)
        aoa.append(a)
        aos.append(b)
        tags.extend([kind] * n)
    v_all, a_all, b_all = np.concatenate(speed), np.concatenate(aoa), np.concatenate(aos)

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    dp = sensor_values(cfg, port_pressure_rows(cfg, v_all, a_all, b_all), rng)
    u = flow_unit_vectors(a_all, b_all)
    velocity = v_all[:, np.newaxis] * u

    log = pd.DataFrame({"t": np.arange(len(v_all), dtype=np.float64) / fs})
    for i in range(N_CHANNELS):
        log[f"dp{i + 1}"] = dp[:, i]
    log["vx"], log["vy"], log["vz"] = velocity[:, 0], velocity[:, 1], velocity[:, 2]
    if include_pitot:
        log["pitot_mps"] = velocity[:, 0] + rng.normal(0.0, pitot_sigma, size=len(v_all))
    log["maneuver"] = tags
    logger.info(f"synthesized flight log: {len(log)} rows, maneuvers {list(maneuvers)}")
    return log

