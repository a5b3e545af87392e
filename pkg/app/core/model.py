"""
Domain types shared by every module: pressure frames, flow states, calibration
runs and datasets, fitted polynomial models and the serialized calibration bundle.

Angles are degrees everywhere outside trigonometric call sites.
"""
from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from app.core.errors import (
    DataValidationError,
    FullScaleExceededError,
    NonFiniteError,
    NonMonotonicTimeError,
    TooShortError,
)
from app.core.polynomial import expand_features, monomial_count

N_CHANNELS = 5
FULL_SCALE_PA = 500.0
MIN_RUN_FRAMES = 10
BUNDLE_SCHEMA_VERSION = 1


class PressureFrame(BaseModel):
    """One timestamped reading of the five differential pressures, sensor 1..5, Pa."""

    model_config = ConfigDict(frozen=True)

    t: float
    dp: tuple[float, float, float, float, float]
    physical: bool = False

    def as_array(self) -> NDArray[np.float64]:
        return np.asarray(self.dp, dtype=np.float64)

    def scaled(self, c: float) -> PressureFrame:
        return self.model_copy(update={"dp": tuple(c * v for v in self.dp)})


def check_pressures(dp: NDArray[np.float64], physical: bool = False) -> None:
    if dp.shape[-1] != N_CHANNELS:
        msg = f"expected {N_CHANNELS} pressure channels, got {dp.shape[-1]}"
        raise DataValidationError(msg)
    if not np.all(np.isfinite(dp)):
        msg = "pressure frame contains non-finite values"
        raise NonFiniteError(msg)
    if physical and np.any(np.abs(dp) > FULL_SCALE_PA):
        worst = float(np.max(np.abs(dp)))
        msg = f"|dp| = {worst:.1f} Pa exceeds the ±{FULL_SCALE_PA:.0f} Pa sensor full scale"
        raise FullScaleExceededError(msg)


def validate_frame(frame: PressureFrame, physical: bool | None = None) -> PressureFrame:
    """Return the frame unchanged if it is finite and, for hardware frames, within full scale."""
    check_pressures(frame.as_array(), frame.physical if physical is None else physical)
    return frame


class Envelope(BaseModel):
    model_config = ConfigDict(frozen=True)

    airspeed_min: float = 3.0
    airspeed_max: float = 27.0
    angle_max: float = 35.0

    def contains(self, airspeed: float, aoa: float, aos: float) -> bool:
        return (
            self.airspeed_min <= airspeed <= self.airspeed_max
            and abs(aoa) <= self.angle_max
            and abs(aos) <= self.angle_max
        )

    def contains_all(self, labels: NDArray[np.float64]) -> NDArray[np.bool_]:
        tol = 1e-9
        return (
            (labels[:, 0] >= self.airspeed_min - tol)
            & (labels[:, 0] <= self.airspeed_max + tol)
            & (np.abs(labels[:, 1]) <= self.angle_max + tol)
            & (np.abs(labels[:, 2]) <= self.angle_max + tol)
        )


DEFAULT_ENVELOPE = Envelope()


class FlowState(BaseModel):
    """Airspeed (m/s), angle of attack and angle of sideslip (deg)."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    airspeed: float = Field(ge=0)
    aoa: float
    aos: float
    calibrated: bool = False

    @model_validator(mode="before")
    @classmethod
    def _default_calibrated(cls, data: Any) -> Any:
        if isinstance(data, dict) and "calibrated" not in data:
            try:
                flag = DEFAULT_ENVELOPE.contains(float(data["airspeed"]), float(data["aoa"]), float(data["aos"]))
            except (KeyError, TypeError, ValueError):
                return data
            data = {**data, "calibrated": flag}
        return data

    @classmethod
    def within(cls, airspeed: float, aoa: float, aos: float, envelope: Envelope = DEFAULT_ENVELOPE) -> FlowState:
        return cls(airspeed=airspeed, aoa=aoa, aos=aos, calibrated=envelope.contains(airspeed, aoa, aos))

    def as_tuple(self) -> tuple[float, float, float]:
        return self.airspeed, self.aoa, self.aos


class BodyVelocity(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    vx: float
    vy: float
    vz: float

    @property
    def speed(self) -> float:
        return math.sqrt(self.vx**2 + self.vy**2 + self.vz**2)


@dataclass(frozen=True, eq=False)
class CalibrationRun:
    """Frames recorded under one known flow state. Timestamps strictly increase."""

    true_state: FlowState
    sample_rate: float
    t: NDArray[np.float64]
    dp: NDArray[np.float64]
    source: str = ""

    def __post_init__(self) -> None:
        t = np.array(self.t, dtype=np.float64)
        dp = np.array(self.dp, dtype=np.float64)
        if dp.ndim != 2 or dp.shape[1] != N_CHANNELS or t.shape != (dp.shape[0],):
            msg = f"run {self.source!r}: expected t (N,) and dp (N, {N_CHANNELS}), got {t.shape} and {dp.shape}"
            raise DataValidationError(msg)
        if not self.sample_rate > 0:
            msg = f"run {self.source!r}: sample rate must be positive, got {self.sample_rate}"
            raise DataValidationError(msg)
        if len(t) < MIN_RUN_FRAMES:
            msg = f"run {self.source!r}: {len(t)} frames, at least {MIN_RUN_FRAMES} required"
            raise TooShortError(msg)
        if np.any(np.diff(t) <= 0):
            msg = f"run {self.source!r}: frame timestamps must strictly increase"
            raise NonMonotonicTimeError(msg)
        check_pressures(dp)
        t.flags.writeable = False
        dp.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "dp", dp)

    @classmethod
    def from_frames(
        cls, true_state: FlowState, sample_rate: float, frames: Sequence[PressureFrame], source: str = ""
    ) -> CalibrationRun:
        t = np.array([f.t for f in frames], dtype=np.float64)
        dp = np.array([f.dp for f in frames], dtype=np.float64).reshape(len(frames), N_CHANNELS)
        return cls(true_state=true_state, sample_rate=sample_rate, t=t, dp=dp, source=source)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def frames(self) -> tuple[PressureFrame, ...]:
        return tuple(PressureFrame(t=float(t), dp=tuple(row.tolist())) for t, row in zip(self.t, self.dp))


class Provenance(str, Enum):
    MEASURED = "measured"
    AUGMENTED = "augmented"


def _frozen(values: ArrayLike, dtype: Any) -> NDArray[Any]:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class CalibrationDataset:
    """
    Regression corpus: normalized features with their flow-state labels.

    Rows are points; `labels` columns are airspeed, aoa, aos. Augmented points
    carry run index -1 and a negative frame index unique within the dataset.
    """

    x: NDArray[np.float64]
    q: NDArray[np.float64]
    labels: NDArray[np.float64]
    augmented: NDArray[np.bool_]
    run_index: NDArray[np.int64]
    frame_index: NDArray[np.int64]
    measurement_count: int = 0
    counts: dict[tuple[float, float, float], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        x = _frozen(self.x, np.float64).reshape(-1, N_CHANNELS)
        n = len(x)
        q = _frozen(self.q, np.float64).reshape(n)
        labels = _frozen(self.labels, np.float64).reshape(n, 3)
        augmented = _frozen(self.augmented, np.bool_).reshape(n)
        run_index = _frozen(self.run_index, np.int64).reshape(n)
        frame_index = _frozen(self.frame_index, np.int64).reshape(n)
        keys = np.stack([run_index, frame_index], axis=1)
        if n and len(np.unique(keys, axis=0)) != n:
            msg = "dataset contains duplicate (run, frame) points"
            raise DataValidationError(msg)
        for name, value in (
            ("x", x),
            ("q", q),
            ("labels", labels),
            ("augmented", augmented),
            ("run_index", run_index),
            ("frame_index", frame_index),
        ):
            object.__setattr__(self, name, value)
        if not self.counts:
            object.__setattr__(self, "counts", _label_counts(labels))

    def __len__(self) -> int:
        return len(self.x)

    @classmethod
    def empty(cls) -> CalibrationDataset:
        return cls(
            x=np.empty((0, N_CHANNELS)),
            q=np.empty(0),
            labels=np.empty((0, 3)),
            augmented=np.empty(0, dtype=bool),
            run_index=np.empty(0, dtype=np.int64),
            frame_index=np.empty(0, dtype=np.int64),
        )

    @classmethod
    def concatenate(cls, parts: Sequence[CalibrationDataset]) -> CalibrationDataset:
        if not parts:
            return cls.empty()
        return cls(
            x=np.concatenate([p.x for p in parts]),
            q=np.concatenate([p.q for p in parts]),
            labels=np.concatenate([p.labels for p in parts]),
            augmented=np.concatenate([p.augmented for p in parts]),
            run_index=np.concatenate([p.run_index for p in parts]),
            frame_index=np.concatenate([p.frame_index for p in parts]),
            measurement_count=sum(p.measurement_count for p in parts),
        )

    def subset(self, index: ArrayLike) -> CalibrationDataset:
        idx = np.asarray(index)
        return CalibrationDataset(
            x=self.x[idx],
            q=self.q[idx],
            labels=self.labels[idx],
            augmented=self.augmented[idx],
            run_index=self.run_index[idx],
            frame_index=self.frame_index[idx],
            measurement_count=self.measurement_count,
        )

    def measured(self) -> CalibrationDataset:
        return self.subset(~self.augmented)

    @property
    def provenance(self) -> list[Provenance]:
        return [Provenance.AUGMENTED if a else Provenance.MEASURED for a in self.augmented]

    def speeds(self) -> NDArray[np.float64]:
        return np.unique(self.labels[:, 0])

    def angle_configs(self) -> NDArray[np.float64]:
        if not len(self):
            return np.empty((0, 2))
        return np.unique(self.labels[:, 1:], axis=0)

    def states(self) -> Iterator[FlowState]:
        for airspeed, aoa, aos in self.labels:
            yield FlowState(airspeed=float(airspeed), aoa=float(aoa), aos=float(aos))


def _label_counts(labels: NDArray[np.float64]) -> dict[tuple[float, float, float], int]:
    if not len(labels):
        return {}
    keys, counts = np.unique(labels, axis=0, return_counts=True)
    return {(float(k[0]), float(k[1]), float(k[2])): int(c) for k, c in zip(keys, counts)}


class PolynomialModel(BaseModel):
    """
    Multivariate polynomial of total degree <= `degree`.

    Coefficients follow graded-lexicographic monomial order with the constant
    term first. Inputs are mapped through (x - offset) / scale before expansion.
    """

    model_config = ConfigDict(frozen=True)

    input_names: tuple[str, ...]
    degree: int = Field(ge=1)
    coefficients: tuple[float, ...]
    input_scaling: tuple[tuple[float, float], ...]

    @computed_field  # type: ignore[prop-decorator]
    @property
    def input_dim(self) -> int:
        return len(self.input_names)

    @model_validator(mode="after")
    def _check_shape(self) -> PolynomialModel:
        n = len(self.input_names)
        if n < 1:
            msg = "polynomial model needs at least one input"
            raise ValueError(msg)
        expected = monomial_count(n, self.degree)
        if len(self.coefficients) != expected:
            msg = f"expected {expected} coefficients for n={n}, d={self.degree}, got {len(self.coefficients)}"
            raise ValueError(msg)
        if len(self.input_scaling) != n:
            msg = f"expected {n} input scalings, got {len(self.input_scaling)}"
            raise ValueError(msg)
        if any(not scale > 0 for _, scale in self.input_scaling):
            msg = "input scales must be positive"
            raise ValueError(msg)
        return self

    def scale_inputs(self, inputs: ArrayLike) -> NDArray[np.float64]:
        arr = np.asarray(inputs, dtype=np.float64)
        offset = np.array([o for o, _ in self.input_scaling])
        scale = np.array([s for _, s in self.input_scaling])
        return (arr - offset) / scale

    def predict(self, inputs: ArrayLike) -> NDArray[np.float64]:
        arr = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
        design = expand_features(self.scale_inputs(arr), self.degree)
        return design @ np.asarray(self.coefficients)

    def predict_one(self, inputs: ArrayLike) -> float:
        return float(self.predict(np.asarray(inputs, dtype=np.float64).reshape(1, -1))[0])


class DegreeTrial(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: str
    degree: int
    mae: float


class BundleMetadata(BaseModel):
    model_config = ConfigDict(frozen=True)

    created_at: datetime
    seed: int
    tool_version: str
    rng: str = "numpy.random.PCG64"
    degree_selection: Literal["fixed", "auto"]
    per_model_degree: bool = False
    degree_trace: tuple[DegreeTrial, ...] = ()
    unidentifiable: dict[str, tuple[str, ...]] = Field(default_factory=dict)
    split_ratio: float = 0.7
    augment: bool = True
    n_train: int = 0
    n_augmented: int = 0
    n_test: int = 0
    input_digests: dict[str, str] = Field(default_factory=dict)


class CalibrationBundle(BaseModel):
    """The serialized sensor calibration: three polynomial models plus normalization metadata."""

    model_config = ConfigDict(frozen=True)

    schema_version: int = BUNDLE_SCHEMA_VERSION
    speed_model: PolynomialModel
    aoa_model: PolynomialModel
    aos_model: PolynomialModel
    rho_ref: float = Field(default=1.225, gt=0)
    q_min: float = Field(default=2.0, ge=0)
    envelope: Envelope = DEFAULT_ENVELOPE
    metadata: BundleMetadata

    @model_validator(mode="after")
    def _check_models(self) -> CalibrationBundle:
        if self.speed_model.input_dim != N_CHANNELS + 1:
            msg = f"speed model takes {N_CHANNELS + 1} inputs, got {self.speed_model.input_dim}"
            raise ValueError(msg)
        for name in ("aoa_model", "aos_model"):
            if getattr(self, name).input_dim != N_CHANNELS:
                msg = f"{name} takes {N_CHANNELS} inputs"
                raise ValueError(msg)
        degrees = {self.speed_model.degree, self.aoa_model.degree, self.aos_model.degree}
        if len(degrees) > 1 and not self.metadata.per_model_degree:
            msg = f"models disagree on degree {sorted(degrees)} without per-model selection"
            raise ValueError(msg)
        return self

    @computed_field  # type: ignore[prop-decorator]
    @property
    def degree(self) -> int:
        return self.aoa_model.degree
