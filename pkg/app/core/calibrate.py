"""
Fit the airspeed, aoa and aos polynomial models: zero-regime augmentation,
shuffled train/test split, elbow degree selection and held-out evaluation.
"""
from __future__ import annotations

from collections import defaultdict
from collections.abc import Sequence
from datetime import datetime, timezone
from typing import Literal, NamedTuple

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator

import app
from app.core.errors import EmptyInputError, EmptyTestError, EnvelopeViolationError, SpanError, TooSmallError
from app.core.estimate import predict_states, speed_inputs
from app.core.model import (
    DEFAULT_ENVELOPE,
    N_CHANNELS,
    BundleMetadata,
    CalibrationBundle,
    CalibrationDataset,
    DegreeTrial,
    Envelope,
    PolynomialModel,
)
from app.core.polynomial import expand_features, monomial_names, solve_least_squares
from app.core.preprocess import DEFAULT_Q_MIN
from app.util.concurrency import ordered_map

ANGLE_INPUTS = tuple(f"x{i + 1}" for i in range(N_CHANNELS))
SPEED_INPUTS = ("s", *ANGLE_INPUTS)
MODEL_NAMES = ("speed", "aoa", "aos")
MIN_SPLIT_POINTS = 10
ANGLE_BIN_DEG = 5.0


class FitConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    degree: int | Literal["auto"] = "auto"
    split_ratio: float = Field(default=0.7, gt=0, lt=1)
    seed: int = 42
    augment: bool = True
    zero_regime_bound: float = Field(default=17.5, ge=0)
    points_per_gap: int = Field(default=3, ge=1)
    candidate_degrees: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    elbow_threshold: float = Field(default=0.2, ge=0)
    selection_split: float = Field(default=0.8, gt=0, lt=1)
    selection_max_points: int = Field(default=20_000, ge=MIN_SPLIT_POINTS)
    per_model_degree: bool = False
    rho_ref: float = Field(default=1.225, gt=0)
    q_min: float = Field(default=DEFAULT_Q_MIN, ge=0)
    rcond: float = Field(default=1e-8, gt=0)
    envelope: Envelope = DEFAULT_ENVELOPE
    max_workers: int | None = None

    @field_validator("degree")
    @classmethod
    def _positive_degree(cls, v: int | str) -> int | str:
        if isinstance(v, int) and v < 1:
            msg = f"degree must be >= 1, got {v}"
            raise ValueError(msg)
        return v

    @field_validator("candidate_degrees")
    @classmethod
    def _ascending(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v or v[0] < 1 or any(b <= a for a, b in zip(v, v[1:])):
            msg = f"candidate degrees must be nonempty, >= 1 and strictly ascending, got {v}"
            raise ValueError(msg)
        return v


class ErrorStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    mae: float = Field(ge=0)
    rmse: float = Field(ge=0)
    n: int

    @classmethod
    def from_errors(cls, errors: ArrayLike) -> ErrorStats:
        e = np.asarray(errors, dtype=np.float64).reshape(-1)
        if not len(e):
            return cls(mae=0.0, rmse=0.0, n=0)
        mae = float(np.mean(np.abs(e)))
        rmse = float(np.sqrt(np.mean(e * e)))
        # rounding can leave rmse an ulp under mae when all |e| are equal
        return cls(mae=mae, rmse=max(rmse, mae), n=len(e))


class BinAccuracy(BaseModel):
    model_config = ConfigDict(frozen=True)

    key: float
    airspeed: ErrorStats
    aoa: ErrorStats
    aos: ErrorStats


class AccuracyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_points: int
    airspeed: ErrorStats
    airspeed_pct: ErrorStats
    aoa: ErrorStats
    aos: ErrorStats
    per_speed: tuple[BinAccuracy, ...] = ()
    per_aoa_bin: tuple[BinAccuracy, ...] = ()
    per_aos_bin: tuple[BinAccuracy, ...] = ()


def augment_zero_regime(dataset: CalibrationDataset, cfg: FitConfig | None = None) -> CalibrationDataset:
    """
    Add linearly interpolated points between adjacent grid labels near zero angle.

    For each speed, each pair of neighbouring labels along one angle axis with
    both ends inside the zero-regime bound gets `points_per_gap` points at
    fractions j / (k + 1), interpolated in label, mean features and mean q.
    Interpolated features are projected back onto the unit sphere that every
    measured feature vector lies on.
    The result holds the input points followed by the augmented ones.
    """
    cfg = cfg or FitConfig()
    if not len(dataset):
        msg = "cannot augment an empty dataset"
        raise EmptyInputError(msg)
    measured = dataset.measured()
    bound = cfg.zero_regime_bound + 1e-9
    k = cfg.points_per_gap

    keys, inverse = np.unique(measured.labels, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    counts = np.bincount(inverse, minlength=len(keys)).astype(np.float64)
    mean_x = np.zeros((len(keys), N_CHANNELS))
    np.add.at(mean_x, inverse, measured.x)
    mean_x /= counts[:, np.newaxis]
    mean_q = np.bincount(inverse, weights=measured.q, minlength=len(keys)) / counts

    new_labels: list[NDArray[np.float64]] = []
    new_x: list[NDArray[np.float64]] = []
    new_q: list[float] = []
    fractions = np.arange(1, k + 1, dtype=np.float64) / (k + 1)

    def add_gap(i: int, j: int) -> None:
        for f in fractions:
            new_labels.append(keys[i] + f * (keys[j] - keys[i]))
            new_x.append(mean_x[i] + f * (mean_x[j] - mean_x[i]))
            new_q.append(float(mean_q[i] + f * (mean_q[j] - mean_q[i])))

    inside = (np.abs(keys[:, 1]) <= bound) & (np.abs(keys[:, 2]) <= bound)
    # varying aoa at fixed aos, then varying aos at fixed aoa
    for moving, fixed in ((1, 2), (2, 1)):
        lines: dict[tuple[float, float], list[int]] = defaultdict(list)
        for i in np.flatnonzero(inside):
            lines[(float(keys[i, 0]), float(keys[i, fixed]))].append(int(i))
        for line in sorted(lines):
            members = sorted(lines[line], key=lambda i: keys[i, moving])
            for a, b in zip(members, members[1:]):
                add_gap(a, b)

    if not new_labels:
        logger.debug("no qualifying zero-regime gaps, dataset unchanged")
        return dataset

    n_new = len(new_labels)
    start = int(min(0, dataset.frame_index.min(initial=0)))
    chords = np.array(new_x)
    augmented = CalibrationDataset(
        x=chords / np.linalg.norm(chords, axis=1, keepdims=True),
        q=np.array(new_q),
        labels=np.array(new_labels),
        augmented=np.ones(n_new, dtype=bool),
        run_index=np.full(n_new, -1, dtype=np.int64),
        frame_index=np.arange(start - 1, start - 1 - n_new, -1, dtype=np.int64),
    )
    logger.debug(f"added {n_new} zero-regime points")
    return CalibrationDataset.concatenate([dataset, augmented])


def shuffle_split(
    dataset: CalibrationDataset, ratio: float = 0.7, seed: int = 42
) -> tuple[CalibrationDataset, CalibrationDataset]:
    """Seeded permutation of measured points; augmented points always land in train."""
    if len(dataset) < MIN_SPLIT_POINTS:
        msg = f"{len(dataset)} points, at least {MIN_SPLIT_POINTS} needed to split"
        raise TooSmallError(msg)
    if not 0 < ratio < 1:
        msg = f"split ratio must lie in (0, 1), got {ratio}"
        raise TooSmallError(msg)
    measured = np.flatnonzero(~dataset.augmented)
    extra = np.flatnonzero(dataset.augmented)
    order = measured[np.random.default_rng(seed).permutation(len(measured))]
    n_train = min(max(int(round(ratio * len(order))), 1), len(order) - 1)
    train = dataset.subset(np.concatenate([order[:n_train], extra]))
    test = dataset.subset(order[n_train:])
    return train, test


def angle_scaling() -> tuple[tuple[float, float], ...]:
    return tuple((0.0, 1.0) for _ in ANGLE_INPUTS)


def speed_scaling(envelope: Envelope) -> tuple[tuple[float, float], ...]:
    mid = (envelope.airspeed_max + envelope.airspeed_min) / 2
    half = (envelope.airspeed_max - envelope.airspeed_min) / 2
    return ((mid, half if half > 0 else 1.0), *angle_scaling())


class ModelFit(NamedTuple):
    model: PolynomialModel
    unidentifiable: list[str]


def fit_polynomial(
    inputs: ArrayLike,
    y: ArrayLike,
    input_names: Sequence[str],
    degree: int,
    scaling: Sequence[tuple[float, float]],
    rcond: float | None = None,
    allow_rank_deficient: bool = True,
    identify: bool = True,
) -> ModelFit:
    scale_only = PolynomialModel(
        input_names=tuple(input_names),
        degree=degree,
        coefficients=(0.0,) * len(monomial_names(input_names, degree)),
        input_scaling=tuple(scaling),
    )
    design = expand_features(scale_only.scale_inputs(inputs), degree)
    solution = solve_least_squares(
        design,
        y,
        names=monomial_names(input_names, degree),
        rcond=rcond,
        allow_rank_deficient=allow_rank_deficient,
        identify=identify,
    )
    model = scale_only.model_copy(update={"coefficients": tuple(solution.coefficients.tolist())})
    return ModelFit(model, solution.unidentifiable)


def _targets(dataset: CalibrationDataset, rho_ref: float) -> dict[str, tuple[NDArray[np.float64], NDArray[np.float64]]]:
    return {
        "speed": (speed_inputs(dataset.x, dataset.q, rho_ref), dataset.labels[:, 0]),
        "aoa": (np.asarray(dataset.x), dataset.labels[:, 1]),
        "aos": (np.asarray(dataset.x), dataset.labels[:, 2]),
    }


def _fit_model(
    name: str, dataset: CalibrationDataset, degree: int, cfg: FitConfig, identify: bool = True
) -> ModelFit:
    inputs, y = _targets(dataset, cfg.rho_ref)[name]
    if name == "speed":
        names, scaling = SPEED_INPUTS, speed_scaling(cfg.envelope)
    else:
        names, scaling = ANGLE_INPUTS, angle_scaling()
    return fit_polynomial(inputs, y, names, degree, scaling, cfg.rcond, identify=identify)


def elbow_degree(degrees: Sequence[int], errors: Sequence[float], threshold: float = 0.2) -> int:
    """
    Pick the elbow of a validation error curve.

    Two candidates: the lower error wins. Otherwise, among degrees whose
    relative improvement over their predecessor exceeds `threshold`, the one
    with the largest discrete curvature of the log error curve, ties to the
    smaller degree. The smallest degree wins when no step clears the threshold.
    """
    if len(degrees) != len(errors) or not degrees:
        msg = "degrees and errors must be nonempty and of equal length"
        raise TooSmallError(msg)
    if len(degrees) == 1:
        return degrees[0]
    if len(degrees) == 2:
        return degrees[0] if errors[0] <= errors[1] else degrees[1]
    e = np.maximum(np.asarray(errors, dtype=np.float64), np.finfo(np.float64).tiny)
    gains = 1.0 - e[1:] / e[:-1]
    # log improvement into each degree; the last degree is followed by a flat step
    steps = np.append(np.log(e[:-1] / e[1:]), 0.0)
    chosen, best = degrees[0], -np.inf
    for i in range(1, len(degrees)):
        curvature = steps[i - 1] - steps[i]
        if gains[i - 1] > threshold and curvature > best:
            chosen, best = degrees[i], curvature
    return chosen


class DegreeSelection(NamedTuple):
    degree: int
    per_model: dict[str, int]
    trace: list[DegreeTrial]


def select_degree(
    train: CalibrationDataset,
    candidates: Sequence[int] = (1, 2, 3, 4, 5, 6),
    seed: int = 42,
    cfg: FitConfig | None = None,
) -> DegreeSelection:
    """Fit every candidate on an internal split of `train` and apply the elbow rule to validation MAE."""
    cfg = cfg or FitConfig()
    if len(candidates) < 2:
        msg = f"degree selection needs at least 2 candidates, got {list(candidates)}"
        raise TooSmallError(msg)
    pool = train
    if len(pool) > cfg.selection_max_points:
        keep = np.sort(np.random.default_rng(seed).choice(len(pool), cfg.selection_max_points, replace=False))
        pool = pool.subset(keep)
    fit_part, val_part = shuffle_split(pool, cfg.selection_split, seed)
    val_targets = _targets(val_part, cfg.rho_ref)

    def trial(degree: int) -> dict[str, float]:
        errors = {}
        for name in MODEL_NAMES:
            model = _fit_model(name, fit_part, degree, cfg, identify=False).model
            inputs, y = val_targets[name]
            pred = model.predict(inputs)
            if name == "speed":
                pred = np.maximum(pred, 0.0)
            errors[name] = float(np.mean(np.abs(pred - y)))
        logger.debug(f"degree {degree}: validation MAE {errors}")
        return errors

    results = ordered_map(trial, list(candidates), cfg.max_workers)
    trace = [
        DegreeTrial(model=name, degree=d, mae=r[name]) for name in MODEL_NAMES for d, r in zip(candidates, results)
    ]
    per_model = {
        name: elbow_degree(list(candidates), [r[name] for r in results], cfg.elbow_threshold) for name in MODEL_NAMES
    }
    degree = per_model["aoa"]
    logger.info(f"elbow selects degree {degree} (aoa curve {[round(r['aoa'], 4) for r in results]})")
    return DegreeSelection(degree, per_model, trace)


def evaluate(bundle: CalibrationBundle, test: CalibrationDataset) -> AccuracyReport:
    points = test.measured()
    if not len(points):
        msg = "test partition holds no measured points"
        raise EmptyTestError(msg)
    airspeed, aoa, aos = predict_states(bundle, points.x, points.q)
    truth = points.labels
    err = np.column_stack([airspeed - truth[:, 0], aoa - truth[:, 1], aos - truth[:, 2]])
    positive = truth[:, 0] > 0
    pct = 100.0 * err[positive, 0] / truth[positive, 0]

    def bins(keys: NDArray[np.float64]) -> tuple[BinAccuracy, ...]:
        out = []
        for key in np.unique(keys):
            sel = keys == key
            out.append(
                BinAccuracy(
                    key=float(key),
                    airspeed=ErrorStats.from_errors(err[sel, 0]),
                    aoa=ErrorStats.from_errors(err[sel, 1]),
                    aos=ErrorStats.from_errors(err[sel, 2]),
                )
            )
        return tuple(out)

    return AccuracyReport(
        n_points=len(points),
        airspeed=ErrorStats.from_errors(err[:, 0]),
        airspeed_pct=ErrorStats.from_errors(pct),
        aoa=ErrorStats.from_errors(err[:, 1]),
        aos=ErrorStats.from_errors(err[:, 2]),
        per_speed=bins(truth[:, 0]),
        per_aoa_bin=bins(np.floor(truth[:, 1] / ANGLE_BIN_DEG) * ANGLE_BIN_DEG),
        per_aos_bin=bins(np.floor(truth[:, 2] / ANGLE_BIN_DEG) * ANGLE_BIN_DEG),
    )


def calibrate(
    dataset: CalibrationDataset,
    cfg: FitConfig | None = None,
    created_at: datetime | None = None,
    input_digests: dict[str, str] | None = None,
) -> tuple[CalibrationBundle, AccuracyReport]:
    cfg = cfg or FitConfig()
    measured = dataset.measured()
    n_speeds, n_angles = len(measured.speeds()), len(measured.angle_configs())
    if n_speeds < 2 or n_angles < 3:
        msg = f"calibration needs >= 2 speeds and >= 3 angle configurations, got {n_speeds} and {n_angles}"
        raise SpanError(msg)
    outside = ~cfg.envelope.contains_all(measured.labels)
    if outside.any():
        first = measured.labels[np.argmax(outside)].tolist()
        msg = f"{int(outside.sum())} points carry labels outside the calibration envelope, first {first}"
        raise EnvelopeViolationError(msg)

    train, test = shuffle_split(measured, cfg.split_ratio, cfg.seed)
    n_measured_train = len(train)
    if cfg.augment:
        train = augment_zero_regime(train, cfg)

    if cfg.degree == "auto":
        selection = select_degree(train, cfg.candidate_degrees, cfg.seed, cfg)
        degrees = selection.per_model if cfg.per_model_degree else dict.fromkeys(MODEL_NAMES, selection.degree)
        trace = tuple(selection.trace)
    else:
        degrees = dict.fromkeys(MODEL_NAMES, int(cfg.degree))
        trace = ()

    fits = dict(
        zip(MODEL_NAMES, ordered_map(lambda n: _fit_model(n, train, degrees[n], cfg), MODEL_NAMES, cfg.max_workers))
    )
    unidentifiable = {name: tuple(fit.unidentifiable) for name, fit in fits.items() if fit.unidentifiable}
    if unidentifiable:
        counts = {name: len(cols) for name, cols in unidentifiable.items()}
        logger.warning(f"minimum-norm fit, unidentifiable monomials per model: {counts}")

    metadata = BundleMetadata(
        created_at=created_at or datetime.now(timezone.utc),
        seed=cfg.seed,
        tool_version=app.__version__,
        degree_selection="auto" if cfg.degree == "auto" else "fixed",
        per_model_degree=cfg.per_model_degree and cfg.degree == "auto",
        degree_trace=trace,
        unidentifiable=unidentifiable,
        split_ratio=cfg.split_ratio,
        augment=cfg.augment,
        n_train=n_measured_train,
        n_augmented=len(train) - n_measured_train,
        n_test=len(test),
        input_digests=input_digests or {},
    )
    bundle = CalibrationBundle(
        speed_model=fits["speed"].model,
        aoa_model=fits["aoa"].model,
        aos_model=fits["aos"].model,
        rho_ref=cfg.rho_ref,
        q_min=cfg.q_min,
        envelope=cfg.envelope,
        metadata=metadata,
    )
    report = evaluate(bundle, test)
    logger.info(
        f"calibrated degree {degrees['aoa']}: airspeed MAE {report.airspeed.mae:.3f} m/s, "
        f"aoa MAE {report.aoa.mae:.3f}°, aos MAE {report.aos.mae:.3f}° on {report.n_points} test points"
    )
    return bundle, report
