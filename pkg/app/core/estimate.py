"""Apply a calibration bundle to pressure frames, one at a time or as a stream."""
from __future__ import annotations

from collections.abc import Iterable, Iterator
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.core.errors import InsufficientAirflowError, NonMonotonicTimeError
from app.core.model import N_CHANNELS, CalibrationBundle, FlowState, PressureFrame, validate_frame
from app.core.preprocess import DEFAULT_CUTOFF_HZ, LowpassFilter, NormalizedSample, normalize_rows


def speed_inputs(x: ArrayLike, q: ArrayLike, rho_ref: float) -> NDArray[np.float64]:
    """Speed-model inputs (s, x1..x5) with s = sqrt(2 q / rho_ref)."""
    xs = np.atleast_2d(np.asarray(x, dtype=np.float64))
    s = np.sqrt(2.0 * np.asarray(q, dtype=np.float64).reshape(-1) / rho_ref)
    return np.column_stack([s, xs])


def predict_states(
    bundle: CalibrationBundle, x: ArrayLike, q: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Vectorized airspeed, aoa, aos for many normalized samples; airspeed floored at 0."""
    xs = np.atleast_2d(np.asarray(x, dtype=np.float64))
    airspeed = np.maximum(bundle.speed_model.predict(speed_inputs(xs, q, bundle.rho_ref)), 0.0)
    return airspeed, bundle.aoa_model.predict(xs), bundle.aos_model.predict(xs)


def estimate_frame(bundle: CalibrationBundle, sample: NormalizedSample) -> FlowState:
    if sample.q < bundle.q_min:
        msg = f"q = {sample.q:.3g} Pa is below q_min = {bundle.q_min:g} Pa"
        raise InsufficientAirflowError(msg)
    x = sample.as_array()
    airspeed = max(0.0, bundle.speed_model.predict_one(speed_inputs(x, sample.q, bundle.rho_ref)[0]))
    aoa = bundle.aoa_model.predict_one(x)
    aos = bundle.aos_model.predict_one(x)
    return FlowState.within(airspeed, aoa, aos, bundle.envelope)


class StreamOutput(NamedTuple):
    t: float
    q: float
    state: FlowState | None

    @property
    def gap(self) -> bool:
        return self.state is None


class StreamEstimator:
    """
    Causal estimator for one pressure stream.

    Owns its filter state; frames whose filtered q falls below the bundle's
    q_min produce a gap marker instead of an estimate. A non-finite frame
    raises before it reaches the filter, so the state stays clean.
    """

    def __init__(self, bundle: CalibrationBundle, fs: float, fc: float = DEFAULT_CUTOFF_HZ) -> None:
        self.bundle = bundle
        self.fs = fs
        self.fc = fc
        self._filter = LowpassFilter(fs, fc)
        self._last_t: float | None = None

    def reset(self) -> None:
        self._filter.reset()
        self._last_t = None

    def push(self, frame: PressureFrame) -> StreamOutput:
        validate_frame(frame)
        if self._last_t is not None and not frame.t > self._last_t:
            msg = f"timestamp {frame.t} does not follow {self._last_t}"
            raise NonMonotonicTimeError(msg)
        self._last_t = frame.t
        filtered = self._filter.update(frame.as_array())
        x, q, ok = normalize_rows(filtered, self.bundle.q_min)
        if not ok[0]:
            return StreamOutput(frame.t, float(q[0]), None)
        sample = NormalizedSample(q=float(q[0]), x=tuple(x[0].tolist()))
        return StreamOutput(frame.t, sample.q, estimate_frame(self.bundle, sample))


def estimate_stream(
    bundle: CalibrationBundle, frames: Iterable[PressureFrame], fs: float, fc: float = DEFAULT_CUTOFF_HZ
) -> Iterator[StreamOutput]:
    estimator = StreamEstimator(bundle, fs, fc)
    for frame in frames:
        yield estimator.push(frame)


def estimate_arrays(
    bundle: CalibrationBundle, t: ArrayLike, dp: ArrayLike, fs: float, fc: float = DEFAULT_CUTOFF_HZ
) -> list[StreamOutput]:
    times = np.asarray(t, dtype=np.float64).reshape(-1)
    pressures = np.asarray(dp, dtype=np.float64).reshape(len(times), N_CHANNELS)
    frames = (PressureFrame(t=float(ti), dp=tuple(row.tolist())) for ti, row in zip(times, pressures))
    return list(estimate_stream(bundle, frames, fs, fc))
