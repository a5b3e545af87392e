"""
Hardware design comparison: reduce the measurement tensor to four resolution and
noise metrics per design, then test tip shape and hole spacing groups.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Literal, NamedTuple

import numpy as np
import scipy.stats
from loguru import logger
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict

from app.core.errors import AxisTooSmallError, DataValidationError, RaggedTensorError, TooSmallError
from app.core.model import N_CHANNELS
from app.util.concurrency import ordered_map

TipShape = Literal["cone", "sphere"]

DEFAULT_SPACINGS_MM = (0.4, 0.7, 0.9, 1.2)
DEFAULT_DESIGN_SPEEDS = (3.0, 6.0, 9.0, 12.0)
DEFAULT_DESIGN_SAMPLES = 70


class DesignSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    design_id: str
    tip: TipShape
    spacing_mm: float


def default_designs() -> tuple[DesignSpec, ...]:
    return tuple(
        DesignSpec(design_id=f"{tip}-{spacing:.1f}", tip=tip, spacing_mm=spacing)
        for tip in ("cone", "sphere")
        for spacing in DEFAULT_SPACINGS_MM
    )


def default_design_angles(limit: float = 70.0, steps: int = 9) -> list[tuple[float, float]]:
    axis = np.linspace(-limit, limit, steps)
    return [(float(aoa), float(aos)) for aoa in axis for aos in axis]


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """
    Measurements indexed [design][speed][sensor][angle config][sample], Pa.

    NaN cells are missing markers and are skipped by every reduction.
    """

    designs: tuple[DesignSpec, ...]
    speeds: NDArray[np.float64]
    angles: NDArray[np.float64]
    tensor: NDArray[np.float64]

    def __post_init__(self) -> None:
        tensor = np.array(self.tensor, dtype=np.float64)
        speeds = np.array(self.speeds, dtype=np.float64).reshape(-1)
        angles = np.array(self.angles, dtype=np.float64).reshape(-1, 2)
        expected = (len(self.designs), len(speeds), N_CHANNELS, len(angles))
        if tensor.ndim != 5 or tensor.shape[:4] != expected:
            msg = f"tensor shape {tensor.shape} does not match axes {expected} + (samples,)"
            raise RaggedTensorError(msg)
        ids = [d.design_id for d in self.designs]
        if len(set(ids)) != len(ids):
            msg = f"duplicate design ids in {ids}"
            raise DataValidationError(msg)
        for arr in (tensor, speeds, angles):
            arr.flags.writeable = False
        object.__setattr__(self, "tensor", tensor)
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "angles", angles)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.tensor.shape)

    @property
    def missing_count(self) -> int:
        return int(np.count_nonzero(np.isnan(self.tensor)))


class DesignMetric(str, Enum):
    ANGULAR_RESOLUTION = "angular_resolution"
    ANGULAR_NOISE = "angular_noise"
    AIRSPEED_RESOLUTION = "airspeed_resolution"
    AIRSPEED_NOISE = "airspeed_noise"


# tensor axes in reduction order: time, angles, sensors, speeds
_AXES = (("time", 4), ("angles", 3), ("sensors", 2), ("speeds", 1))
_DEFINING_AXIS = {
    DesignMetric.ANGULAR_RESOLUTION: "angles",
    DesignMetric.ANGULAR_NOISE: "time",
    DesignMetric.AIRSPEED_RESOLUTION: "speeds",
    DesignMetric.AIRSPEED_NOISE: "time",
}
ANGULAR_SENSORS = (1, 2, 3, 4)
AIRSPEED_SENSORS = (0,)


def metric_sensors(metric: DesignMetric) -> tuple[int, ...]:
    if metric in (DesignMetric.ANGULAR_RESOLUTION, DesignMetric.ANGULAR_NOISE):
        return ANGULAR_SENSORS
    return AIRSPEED_SENSORS


def reduce_metric(matrix: DesignMatrix, metric: DesignMetric | str) -> dict[str, float]:
    metric = DesignMetric(metric)
    values = matrix.tensor[:, :, list(metric_sensors(metric))]
    defining = _DEFINING_AXIS[metric]
    for name, axis in _AXES:
        if name == defining:
            if values.shape[axis] < 2:
                msg = f"{metric.value}: the {name} axis has {values.shape[axis]} element(s), std needs 2"
                raise AxisTooSmallError(msg)
            values = np.nanstd(values, axis=axis)
        else:
            values = np.nanmean(values, axis=axis)
    return {d.design_id: float(v) for d, v in zip(matrix.designs, values)}


class WelchResult(NamedTuple):
    t: float
    df: float
    p: float


def welch_t_test(a: ArrayLike, b: ArrayLike) -> WelchResult:
    """Two-sided Welch t-test; sample variances, Welch-Satterthwaite degrees of freedom."""
    xa = np.asarray(a, dtype=np.float64).reshape(-1)
    xb = np.asarray(b, dtype=np.float64).reshape(-1)
    na, nb = len(xa), len(xb)
    if na < 2 or nb < 2:
        msg = f"each group needs at least 2 samples, got {na} and {nb}"
        raise TooSmallError(msg)
    ma, mb = float(np.mean(xa)), float(np.mean(xb))
    va, vb = float(np.var(xa, ddof=1)), float(np.var(xb, ddof=1))
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    if se2 == 0.0:
        if ma == mb:
            return WelchResult(0.0, float(na + nb - 2), 1.0)
        logger.warning(f"both groups have zero variance with different means ({ma:g} vs {mb:g}), p set to 0")
        return WelchResult(math.copysign(math.inf, ma - mb), float(na + nb - 2), 0.0)
    t = (ma - mb) / math.sqrt(se2)
    df = se2**2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    p = float(2.0 * scipy.stats.t.sf(abs(t), df))
    return WelchResult(float(t), float(df), min(p, 1.0))


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


class GroupTest(BaseModel):
    model_config = ConfigDict(frozen=True)

    metric: DesignMetric
    grouping: Literal["tip", "spacing"]
    group_a: str
    group_b: str
    mean_a: float
    mean_b: float
    t: float
    df: float
    p: float
    stars: str


class DesignReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    designs: tuple[DesignSpec, ...]
    metrics: dict[str, dict[DesignMetric, float]]
    tests: tuple[GroupTest, ...]
    shape: tuple[int, ...]
    missing_cells: int

    def tests_for(self, metric: DesignMetric | str, grouping: str = "tip") -> list[GroupTest]:
        metric = DesignMetric(metric)
        return [t for t in self.tests if t.metric == metric and t.grouping == grouping]


def _group_test(
    metric: DesignMetric,
    grouping: Literal["tip", "spacing"],
    name_a: str,
    a: Sequence[float],
    name_b: str,
    b: Sequence[float],
) -> GroupTest | None:
    if len(a) < 2 or len(b) < 2:
        logger.warning(f"{metric.value}: skipping {name_a} vs {name_b}, each group needs 2 designs")
        return None
    result = welch_t_test(a, b)
    return GroupTest(
        metric=metric,
        grouping=grouping,
        group_a=name_a,
        group_b=name_b,
        mean_a=float(np.mean(a)),
        mean_b=float(np.mean(b)),
        t=result.t,
        df=result.df,
        p=result.p,
        stars=significance_stars(result.p),
    )


def compare_designs(matrix: DesignMatrix, max_workers: int | None = None) -> DesignReport:
    if len(matrix.designs) < 2:
        msg = f"design comparison needs at least 2 designs, got {len(matrix.designs)}"
        raise TooSmallError(msg)

    metrics = list(DesignMetric)
    reduced = ordered_map(lambda m: reduce_metric(matrix, m), metrics, max_workers)
    per_design = {d.design_id: {m: r[d.design_id] for m, r in zip(metrics, reduced)} for d in matrix.designs}

    tests: list[GroupTest] = []
    spacings = sorted({d.spacing_mm for d in matrix.designs})
    for metric, values in zip(metrics, reduced):
        cone = [values[d.design_id] for d in matrix.designs if d.tip == "cone"]
        sphere = [values[d.design_id] for d in matrix.designs if d.tip == "sphere"]
        if cone and sphere:
            test = _group_test(metric, "tip", "cone", cone, "sphere", sphere)
            if test:
                tests.append(test)
        for sa, sb in combinations(spacings, 2):
            a = [values[d.design_id] for d in matrix.designs if d.spacing_mm == sa]
            b = [values[d.design_id] for d in matrix.designs if d.spacing_mm == sb]
            test = _group_test(metric, "spacing", f"{sa:g} mm", a, f"{sb:g} mm", b)
            if test:
                tests.append(test)

    for test in tests:
        if test.grouping == "tip":
            logger.info(
                f"{test.metric.value}: cone {test.mean_a:.4g} vs sphere {test.mean_b:.4g}, p={test.p:.3g}{test.stars}"
            )
    return DesignReport(
        designs=matrix.designs,
        metrics=per_design,
        tests=tuple(tests),
        shape=matrix.shape,
        missing_cells=matrix.missing_count,
    )
