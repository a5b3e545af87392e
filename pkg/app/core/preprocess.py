"""
Raw runs to regression-ready samples: low-pass filter, steady-window slice,
q-factor and normalization.
"""
from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.signal
from loguru import logger
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import (
    DeadRunError,
    EmptyInputError,
    EnvelopeViolationError,
    InsufficientAirflowError,
    InvalidCutoffError,
    TooShortError,
)
from app.core.model import (
    DEFAULT_ENVELOPE,
    MIN_RUN_FRAMES,
    N_CHANNELS,
    CalibrationDataset,
    CalibrationRun,
    Envelope,
    FlowState,
    PressureFrame,
)
from app.util.concurrency import ordered_map

DEFAULT_CUTOFF_HZ = 10.0
DEFAULT_Q_MIN = 2.0
TRIM_PERCENT = 15
# normalized features live on a 2^-31 grid so that x(c * dp) == x(dp) bit for bit, except when a
# component lands within a few ulps of a grid midpoint (odds about 1e-6 per component for c not a power of two).
# The grid must stay finer than the fit rcond, so |x| - 1 keeps the sphere redundancy detectable.
FEATURE_QUANTUM = 2.0**-31


class NormalizedSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: float = Field(ge=0)
    x: tuple[float, float, float, float, float]

    def as_array(self) -> NDArray[np.float64]:
        return np.asarray(self.x, dtype=np.float64)


def lowpass_coefficients(fs: float, fc: float) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """First-order Butterworth, bilinear transform with the cutoff prewarped."""
    if not (fs > 0 and 0 < fc < fs / 2):
        msg = f"cutoff {fc} Hz must lie in (0, {fs / 2:g}) for fs = {fs} Hz"
        raise InvalidCutoffError(msg)
    b, a = scipy.signal.butter(1, fc, btype="low", fs=fs)
    return np.asarray(b, dtype=np.float64), np.asarray(a, dtype=np.float64)


def lowpass_filter(samples: ArrayLike, fs: float, fc: float) -> NDArray[np.float64]:
    """
    Causal filter along axis 0, state seeded with the first sample.

    Accepts (N,) or (N, channels); output has the input's shape.
    """
    b, a = lowpass_coefficients(fs, fc)
    x = np.asarray(samples, dtype=np.float64)
    if len(x) == 0:
        msg = "cannot filter an empty signal"
        raise TooShortError(msg)
    zi = scipy.signal.lfilter_zi(b, a)
    zi = zi.reshape((-1,) + (1,) * (x.ndim - 1)) * x[0]
    y, _ = scipy.signal.lfilter(b, a, x, axis=0, zi=zi)
    return np.asarray(y)


class LowpassFilter:
    """Streaming form of `lowpass_filter`; one instance per stream, output identical to the batch call."""

    def __init__(self, fs: float, fc: float, channels: int = N_CHANNELS) -> None:
        self.b, self.a = lowpass_coefficients(fs, fc)
        self.channels = channels
        self._zi_unit = scipy.signal.lfilter_zi(self.b, self.a).reshape(-1, 1)
        self._state: NDArray[np.float64] | None = None

    def reset(self) -> None:
        self._state = None

    def update(self, sample: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(sample, dtype=np.float64).reshape(1, self.channels)
        if self._state is None:
            self._state = self._zi_unit * x[0]
        y, self._state = scipy.signal.lfilter(self.b, self.a, x, axis=0, zi=self._state)
        return np.asarray(y[0])


def steady_slice(n: int) -> slice:
    if n < MIN_RUN_FRAMES:
        msg = f"{n} samples, at least {MIN_RUN_FRAMES} needed for a steady window"
        raise TooShortError(msg)
    k = (TRIM_PERCENT * n) // 100
    return slice(k, n - k)


def steady_window(samples: ArrayLike) -> NDArray[np.float64]:
    """Middle 70 %: floor(0.15 N) samples dropped from each end."""
    arr = np.asarray(samples)
    return arr[steady_slice(len(arr))]


def q_factors(dp: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(dp, dtype=np.float64)
    return np.asarray(np.sqrt(np.sum(arr * arr, axis=-1)))


def q_factor(frame: PressureFrame) -> float:
    return float(q_factors(frame.as_array()[np.newaxis, :])[0])


def normalize_rows(
    dp: ArrayLike, q_min: float = DEFAULT_Q_MIN
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.bool_]]:
    """Vectorized normalization. Returns (x, q, ok); rows with q < q_min carry NaN features."""
    arr = np.asarray(dp, dtype=np.float64).reshape(-1, N_CHANNELS)
    q = q_factors(arr)
    ok = q >= q_min
    x = np.full_like(arr, np.nan)
    if np.any(ok):
        raw = arr[ok] / q[ok, np.newaxis]
        x[ok] = np.rint(raw / FEATURE_QUANTUM) * FEATURE_QUANTUM
    return x, q, ok


def normalize_frame(frame: PressureFrame, q_min: float = DEFAULT_Q_MIN) -> NormalizedSample:
    x, q, ok = normalize_rows(frame.as_array(), q_min)
    if not ok[0]:
        msg = f"q = {q[0]:.3g} Pa is below q_min = {q_min:g} Pa"
        raise InsufficientAirflowError(msg)
    return NormalizedSample(q=float(q[0]), x=tuple(x[0].tolist()))


@dataclass(frozen=True, eq=False)
class PreprocessedRun:
    label: FlowState
    x: NDArray[np.float64]
    q: NDArray[np.float64]
    frame_index: NDArray[np.int64]
    n_frames: int
    n_dropped: int

    def __len__(self) -> int:
        return len(self.q)

    def __iter__(self) -> Iterator[tuple[NormalizedSample, FlowState]]:
        for x, q in zip(self.x, self.q):
            yield NormalizedSample(q=float(q), x=tuple(x.tolist())), self.label


def preprocess_run(
    run: CalibrationRun, fc: float = DEFAULT_CUTOFF_HZ, q_min: float = DEFAULT_Q_MIN
) -> PreprocessedRun:
    filtered = lowpass_filter(run.dp, run.sample_rate, fc)
    window = steady_slice(len(filtered))
    x, q, ok = normalize_rows(filtered[window], q_min)
    failed = int(np.count_nonzero(~ok))
    if failed * 2 > len(ok):
        msg = f"run {run.source or run.true_state.as_tuple()}: {failed} of {len(ok)} frames below q_min"
        raise DeadRunError(msg)
    if failed:
        logger.debug(f"run {run.source}: dropped {failed} low-q frames")
    frame_index = np.arange(window.start, window.stop, dtype=np.int64)[ok]
    return PreprocessedRun(
        label=run.true_state,
        x=x[ok],
        q=q[ok],
        frame_index=frame_index,
        n_frames=len(run),
        n_dropped=failed,
    )


def assemble_dataset(
    runs: Sequence[CalibrationRun],
    fc: float = DEFAULT_CUTOFF_HZ,
    q_min: float = DEFAULT_Q_MIN,
    envelope: Envelope = DEFAULT_ENVELOPE,
    max_workers: int | None = None,
) -> CalibrationDataset:
    if not runs:
        msg = "no calibration runs given"
        raise EmptyInputError(msg)
    for i, run in enumerate(runs):
        if not envelope.contains(*run.true_state.as_tuple()):
            msg = f"run {run.source or i}: label {run.true_state.as_tuple()} lies outside the calibration envelope"
            raise EnvelopeViolationError(msg)

    processed = ordered_map(lambda r: preprocess_run(r, fc, q_min), runs, max_workers)

    parts = []
    for i, pre in enumerate(processed):
        n = len(pre)
        parts.append(
            CalibrationDataset(
                x=pre.x,
                q=pre.q,
                labels=np.tile(np.asarray(pre.label.as_tuple()), (n, 1)),
                augmented=np.zeros(n, dtype=bool),
                run_index=np.full(n, i, dtype=np.int64),
                frame_index=pre.frame_index,
                measurement_count=pre.n_frames * N_CHANNELS,
            )
        )
    dataset = CalibrationDataset.concatenate(parts)
    logger.info(
        f"assembled {len(dataset)} points from {len(runs)} runs "
        f"({dataset.measurement_count} measurements, {len(dataset.counts)} flow states)"
    )
    return dataset
