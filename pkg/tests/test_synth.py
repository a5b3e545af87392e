import math

import numpy as np
import pytest

from app.core.errors import AngleOutOfRangeError, DataValidationError
from app.core.model import FULL_SCALE_PA
from app.core.synth import (
    OracleConfig,
    default_calibration_angles,
    flow_unit_vector,
    generate_design_matrix,
    generate_flight_log,
    generate_grid,
    port_pressures,
    sensor_values,
)


def test_flow_unit_vectors() -> None:
    np.testing.assert_allclose(flow_unit_vector(0.0, 0.0), [1.0, 0.0, 0.0])
    np.testing.assert_allclose(flow_unit_vector(45.0, 0.0), [math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    np.testing.assert_allclose(flow_unit_vector(0.0, -45.0), [math.sqrt(0.5), -math.sqrt(0.5), 0.0])
    u = flow_unit_vector(20.0, 30.0)
    assert np.linalg.norm(u) == pytest.approx(1.0)
    assert u[2] / u[0] == pytest.approx(math.tan(math.radians(20.0)))


@pytest.mark.parametrize(("aoa", "aos"), [(90.0, 0.0), (0.0, -90.0), (float("nan"), 0.0)])
def test_flow_angle_limits(aoa: float, aos: float) -> None:
    with pytest.raises(AngleOutOfRangeError):
        flow_unit_vector(aoa, aos)


def test_axial_flow_pressures() -> None:
    cfg = OracleConfig()
    ports = port_pressures(cfg, 12.0, 0.0, 0.0)
    assert ports.shape == (13,)
    assert ports[0] == pytest.approx(88.2)
    # peripheral ports sit 45 degrees off axis, cos^2 = 1/2 for the default cone
    np.testing.assert_allclose(ports[1:9], 44.1)
    np.testing.assert_allclose(ports[9:], 0.0, atol=1e-12)
    np.testing.assert_allclose(sensor_values(cfg, ports)[0], [-88.2, 0.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_zero_speed_gives_zero_pressure() -> None:
    np.testing.assert_array_equal(port_pressures(OracleConfig(), 0.0, 20.0, -10.0), 0.0)
    with pytest.raises(DataValidationError):
        port_pressures(OracleConfig(), -1.0, 0.0, 0.0)


def test_pressures_scale_with_speed_squared() -> None:
    cfg = OracleConfig()
    np.testing.assert_allclose(port_pressures(cfg, 20.0, 10.0, 5.0), 4.0 * port_pressures(cfg, 10.0, 10.0, 5.0))


def test_mirrored_flow_mirrors_sensors() -> None:
    cfg = OracleConfig()
    up = sensor_values(cfg, port_pressures(cfg, 12.0, 15.0, 5.0))[0]
    down = sensor_values(cfg, port_pressures(cfg, 12.0, -15.0, 5.0))[0]
    # flipping aoa mirrors z: the up-down pair negates and the two diagonals swap with a sign change
    np.testing.assert_allclose(down[[0, 1, 3]], up[[0, 1, 3]] * [1, 1, -1], atol=1e-12)
    np.testing.assert_allclose(down[[2, 4]], -up[[4, 2]], atol=1e-12)
    assert up[3] != 0.0


def test_sphere_decays_faster_off_axis() -> None:
    cone = port_pressures(OracleConfig(tip="cone"), 12.0, 0.0, 0.0)
    sphere = port_pressures(OracleConfig(tip="sphere"), 12.0, 0.0, 0.0)
    assert OracleConfig(tip="sphere").decay_exponent == pytest.approx(4.0 / 1.5)
    assert sphere[0] == cone[0]
    assert sphere[1] < cone[1]


def test_full_scale_clip() -> None:
    cfg = OracleConfig(full_scale_clip=True)
    dp = sensor_values(cfg, port_pressures(cfg, 40.0, 0.0, 0.0))[0]
    assert dp[0] == -FULL_SCALE_PA


def test_grid_counts_and_order() -> None:
    runs = generate_grid(OracleConfig(), speeds=(3.0, 6.0), duration=1.0, fs=33.0)
    assert len(default_calibration_angles()) == 17
    assert len(runs) == 34
    assert runs[0].true_state.airspeed == 3.0
    assert runs[17].true_state.airspeed == 6.0
    assert all(len(r.t) == 33 for r in runs)


def test_grid_rejects_short_runs() -> None:
    with pytest.raises(DataValidationError, match="at least 10"):
        generate_grid(OracleConfig(), speeds=(6.0,), duration=0.2, fs=33.0)


def test_grid_is_seed_deterministic() -> None:
    cfg = OracleConfig(noise_sigma=0.5, seed=9)
    first = generate_grid(cfg, speeds=(6.0,), duration=0.5, fs=33.0)
    second = generate_grid(cfg, speeds=(6.0,), duration=0.5, fs=33.0, max_workers=3)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.dp, b.dp)
    other = generate_grid(cfg.model_copy(update={"seed": 10}), speeds=(6.0,), duration=0.5, fs=33.0)
    assert not np.array_equal(first[0].dp, other[0].dp)


def test_design_matrix_shape() -> None:
    angles = [(0.0, 0.0), (10.0, 5.0), (-20.0, 0.0)]
    matrix = generate_design_matrix(speeds=(3.0, 6.0), angle_grid=angles, samples=4, base=OracleConfig(noise_sigma=0.3))
    assert matrix.shape == (8, 2, 5, 3, 4)
    assert matrix.missing_count == 0
    noise = matrix.tensor.std(axis=-1)
    assert noise.max() > 0


def test_flight_log_columns() -> None:
    log = generate_flight_log(OracleConfig(), maneuvers=("yaw",), fs=10.0)
    assert list(log.columns) == ["t", "dp1", "dp2", "dp3", "dp4", "dp5", "vx", "vy", "vz", "pitot_mps", "maneuver"]
    assert len(log) == 120
    speed = np.sqrt(log["vx"] ** 2 + log["vy"] ** 2 + log["vz"] ** 2)
    np.testing.assert_allclose(speed, 12.0)
    bare = generate_flight_log(OracleConfig(), maneuvers=("circle",), fs=10.0, include_pitot=False)
    assert "pitot_mps" not in bare.columns
    with pytest.raises(DataValidationError):
        generate_flight_log(OracleConfig(), maneuvers=("loop",))
