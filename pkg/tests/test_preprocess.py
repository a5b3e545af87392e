import math

import numpy as np
import pytest

from app.core.errors import (
    DeadRunError,
    EmptyInputError,
    EnvelopeViolationError,
    InsufficientAirflowError,
    InvalidCutoffError,
    TooShortError,
)
from app.core.model import CalibrationDataset, CalibrationRun, FlowState, PressureFrame
from app.core.preprocess import (
    LowpassFilter,
    assemble_dataset,
    lowpass_filter,
    normalize_frame,
    normalize_rows,
    preprocess_run,
    q_factor,
    steady_window,
)
from app.core.synth import OracleConfig, generate_grid


def _frame(*dp: float) -> PressureFrame:
    return PressureFrame(t=0.0, dp=dp)


def test_constant_input_passes_unchanged() -> None:
    for fs, fc in ((33.0, 10.0), (1000.0, 10.0), (50.0, 24.0)):
        y = lowpass_filter(np.full(200, 3.7), fs, fc)
        np.testing.assert_allclose(y, 3.7, rtol=0, atol=1e-9)


def test_step_settles_within_20_samples() -> None:
    step = np.concatenate([np.zeros(1), np.ones(40)])
    y = lowpass_filter(step, 33.0, 10.0)
    assert abs(y[21] - 1.0) <= 1e-6


def test_cutoff_amplitude_is_minus_3db() -> None:
    fs, fc = 1000.0, 10.0
    t = np.arange(int(5 * fs)) / fs
    y = lowpass_filter(np.sin(2 * np.pi * fc * t), fs, fc)
    steady = y[len(y) // 2 :]
    amplitude = (steady.max() - steady.min()) / 2
    assert amplitude == pytest.approx(1 / math.sqrt(2), rel=0.02)


@pytest.mark.parametrize("fc", [16.6, 16.5, 0.0, -1.0])
def test_invalid_cutoff(fc: float) -> None:
    with pytest.raises(InvalidCutoffError):
        lowpass_filter(np.ones(10), 33.0, fc)


def test_streaming_filter_matches_batch() -> None:
    rng = np.random.default_rng(3)
    x = rng.normal(size=(50, 5))
    stream = LowpassFilter(33.0, 10.0)
    streamed = np.array([stream.update(row) for row in x])
    np.testing.assert_array_equal(streamed, lowpass_filter(x, 33.0, 10.0))


@pytest.mark.parametrize(("n", "expected"), [(660, 462), (100, 70), (10, 8)])
def test_steady_window_lengths(n: int, expected: int) -> None:
    window = steady_window(np.arange(n))
    assert len(window) == expected
    assert window[0] == (n - expected) // 2
    np.testing.assert_array_equal(np.diff(window), 1)


def test_steady_window_on_660_keeps_99_to_560() -> None:
    window = steady_window(np.arange(660))
    assert (window[0], window[-1]) == (99, 560)


def test_steady_window_too_short() -> None:
    with pytest.raises(TooShortError):
        steady_window(np.arange(9))


def test_q_factor() -> None:
    assert q_factor(_frame(3, 4, 0, 0, 0)) == 5.0
    assert q_factor(_frame(0, 0, 0, 0, 0)) == 0.0
    assert q_factor(_frame(-88.2, 0, 0, 0, 0)) == pytest.approx(88.2)


def test_normalize_frame() -> None:
    sample = normalize_frame(_frame(3, 4, 0, 0, 0), q_min=2.0)
    assert sample.q == 5.0
    np.testing.assert_allclose(sample.x, (0.6, 0.8, 0.0, 0.0, 0.0), atol=1e-9)
    with pytest.raises(InsufficientAirflowError):
        normalize_frame(_frame(0.5, 0, 0, 0, 0), q_min=2.0)


def test_normalized_features_have_unit_norm() -> None:
    dp = np.random.default_rng(0).normal(scale=50.0, size=(500, 5))
    x, q, ok = normalize_rows(dp, 2.0)
    assert ok.all()
    np.testing.assert_allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-9)


def test_normalize_is_scale_exact() -> None:
    rng = np.random.default_rng(1)
    for row in rng.normal(scale=40.0, size=(200, 5)):
        frame = PressureFrame(t=0.0, dp=tuple(row.tolist()))
        base = normalize_frame(frame)
        for c in (0.5, 2.0, 10.0):
            scaled = normalize_frame(frame.scaled(c))
            assert scaled.x == base.x
            assert scaled.q == pytest.approx(c * base.q, rel=1e-12)


def _constant_run(dp: tuple[float, ...], n: int = 660) -> CalibrationRun:
    return CalibrationRun(
        true_state=FlowState(airspeed=12.0, aoa=0.0, aos=0.0),
        sample_rate=33.0,
        t=np.arange(n) / 33.0,
        dp=np.tile(dp, (n, 1)),
        source="const",
    )


def test_preprocess_run_counts_and_labels() -> None:
    pre = preprocess_run(_constant_run((-88.2, 1.0, 0.0, 0.0, 0.0)))
    assert len(pre) == 462
    assert pre.frame_index[0] == 99
    assert pre.n_dropped == 0
    samples = list(pre)
    assert all(label == pre.label for _, label in samples)
    # constant input stays constant through the filter
    assert len({s.x for s, _ in samples}) == 1


def test_all_zero_run_is_dead() -> None:
    with pytest.raises(DeadRunError):
        preprocess_run(_constant_run((0.0, 0.0, 0.0, 0.0, 0.0)))


def test_assemble_dataset_counts() -> None:
    runs = generate_grid(OracleConfig(), speeds=(6.0, 12.0, 18.0), duration=20.0, fs=33.0)
    ds = assemble_dataset(runs)
    assert len(runs) == 3 * 17
    assert ds.measurement_count == 3 * 17 * 660 * 5
    assert len(ds) == 3 * 17 * 462
    assert set(ds.counts.values()) == {462}
    assert not ds.augmented.any()


def test_measurement_arithmetic_for_full_grid() -> None:
    # 153 runs of 660 frames, five channels each
    assert 153 * 660 * 5 == 504_900
    single = assemble_dataset([_constant_run((-88.2, 1.0, 0.0, 0.0, 0.0))])
    assert len(single) == 462
    assert single.measurement_count == 660 * 5


def test_assemble_rejects_empty_and_out_of_envelope() -> None:
    with pytest.raises(EmptyInputError):
        assemble_dataset([])
    run = _constant_run((-88.2, 1.0, 0.0, 0.0, 0.0))
    outside = CalibrationRun(FlowState(airspeed=40.0, aoa=0.0, aos=0.0), run.sample_rate, run.t, run.dp)
    with pytest.raises(EnvelopeViolationError):
        assemble_dataset([run, outside])


def test_assemble_is_order_independent_across_workers() -> None:
    runs = generate_grid(OracleConfig(noise_sigma=0.3), speeds=(6.0, 12.0), duration=1.0, fs=33.0)
    serial = assemble_dataset(runs, max_workers=1)
    threaded = assemble_dataset(runs, max_workers=4)
    assert isinstance(serial, CalibrationDataset)
    np.testing.assert_array_equal(serial.x, threaded.x)
    np.testing.assert_array_equal(serial.run_index, threaded.run_index)
