import math

import numpy as np
import pytest

from app.core.errors import ForwardSpeedTooLowError, MissingColumnsError, NonMonotonicTimeError
from app.core.flight import ZERO_WIND_BANNER, align_series, reference_angles, reference_arrays, validate
from app.core.model import BodyVelocity, CalibrationBundle
from app.core.synth import OracleConfig, generate_flight_log


@pytest.mark.parametrize(
    ("v", "expected"),
    [
        ((10.0, 0.0, 0.0), (0.0, 0.0)),
        ((10.0, 0.0, 10.0), (45.0, 0.0)),
        ((10.0, -10.0, 0.0), (0.0, -45.0)),
        ((10.0, -5.0, 0.0), (0.0, -26.56505117707799)),
        ((12.0, 1.0, -2.0), (math.degrees(math.atan(-2 / 12)), math.degrees(math.atan(1 / 12)))),
    ],
)
def test_reference_angles(v: tuple[float, float, float], expected: tuple[float, float]) -> None:
    alpha, beta = reference_angles(BodyVelocity(vx=v[0], vy=v[1], vz=v[2]))
    assert alpha == pytest.approx(expected[0], abs=1e-9)
    assert beta == pytest.approx(expected[1], abs=1e-9)


@pytest.mark.parametrize("vx", [1.0, 0.5, 0.0, -5.0])
def test_reference_needs_forward_speed(vx: float) -> None:
    with pytest.raises(ForwardSpeedTooLowError):
        reference_angles(BodyVelocity(vx=vx, vy=0.0, vz=0.0))


def test_reference_arrays_mark_slow_rows() -> None:
    speed, alpha, beta = reference_arrays([10.0, 0.5], [0.0, 0.0], [10.0, 0.0])
    assert speed[0] == pytest.approx(math.sqrt(200.0))
    assert alpha[0] == pytest.approx(45.0)
    assert beta[0] == 0.0
    assert all(np.isnan(arr[1]) for arr in (speed, alpha, beta))


def test_align_identical_series() -> None:
    t = np.arange(10) * 0.02
    alignment = align_series(t, t)
    np.testing.assert_array_equal(alignment.a_index, np.arange(10))
    np.testing.assert_array_equal(alignment.b_index, np.arange(10))
    assert (alignment.dropped_a, alignment.dropped_b) == (0, 0)


def test_align_respects_tolerance() -> None:
    alignment = align_series([0.0, 1.0, 2.0], [0.03, 1.2, 2.0], tol=0.05)
    assert alignment.a_index.tolist() == [0, 2]
    assert alignment.b_index.tolist() == [0, 2]
    assert (alignment.dropped_a, alignment.dropped_b) == (1, 1)


def test_align_claims_each_sample_once() -> None:
    alignment = align_series([0.0, 0.02], [0.015], tol=0.05)
    assert alignment.a_index.tolist() == [1]
    assert alignment.b_index.tolist() == [0]
    assert alignment.pairs + alignment.dropped_a == 2


def test_align_matches_brute_force() -> None:
    rng = np.random.default_rng(12)
    ta = np.cumsum(rng.uniform(0.01, 0.05, 200))
    tb = np.cumsum(rng.uniform(0.01, 0.05, 220))
    tol = 0.01
    alignment = align_series(ta, tb, tol)
    # brute force: nearest b for each a, then keep the closest claimant of each b
    best: dict[int, tuple[float, int]] = {}
    for i, t in enumerate(ta):
        j = int(np.argmin(np.abs(tb - t)))
        gap = abs(tb[j] - t)
        if gap <= tol and (j not in best or gap < best[j][0]):
            best[j] = (gap, i)
    expected = sorted((i, j) for j, (_, i) in best.items())
    assert list(zip(alignment.a_index.tolist(), alignment.b_index.tolist())) == expected
    assert alignment.pairs + alignment.dropped_a == len(ta)
    assert alignment.pairs + alignment.dropped_b == len(tb)


def test_align_rejects_unsorted_and_handles_empty() -> None:
    with pytest.raises(NonMonotonicTimeError):
        align_series([0.0, 0.0], [0.0])
    empty = align_series([], [0.0, 1.0])
    assert (empty.pairs, empty.dropped_a, empty.dropped_b) == (0, 0, 2)


@pytest.fixture(scope="module")
def flight_log():
    return generate_flight_log(OracleConfig(noise_sigma=0.2, seed=3), fs=50.0)


def test_validate_zero_wind_log(flight_bundle: CalibrationBundle, flight_log) -> None:
    report = validate(flight_bundle, flight_log, fc=10.0)
    assert report.banner == ZERO_WIND_BANNER
    assert report.sample_rate_hz == pytest.approx(50.0)
    assert report.has_pitot
    assert report.n_paired + report.unpaired_mpp + report.mpp_gaps == report.n_rows
    assert report.overall.aoa <= 0.5
    assert report.overall.aos <= 0.5
    assert report.overall.airspeed_vs_reference <= 0.5
    assert report.overall.pitot_vs_reference < 1.0
    assert set(report.per_maneuver) == {"circle", "stall", "yaw"}
    assert sum(e.n for e in report.per_maneuver.values()) == report.n_paired
    assert int(report.series["paired"].sum()) == report.n_paired


def test_validate_without_pitot(flight_bundle: CalibrationBundle, flight_log) -> None:
    report = validate(flight_bundle, flight_log.drop(columns=["pitot_mps"]), fs=50.0)
    assert not report.has_pitot
    assert report.overall.airspeed_vs_pitot is None
    assert report.overall.airspeed_vs_reference is not None
    assert any("pitot" in note for note in report.notes)


def test_validate_requires_velocity(flight_bundle: CalibrationBundle, flight_log) -> None:
    with pytest.raises(MissingColumnsError) as info:
        validate(flight_bundle, flight_log.drop(columns=["vy"]))
    assert info.value.missing == ["vy"]
