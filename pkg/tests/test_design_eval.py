import math

import numpy as np
import pytest

from app.core.design_eval import (
    DesignMatrix,
    DesignMetric,
    DesignSpec,
    compare_designs,
    default_design_angles,
    default_designs,
    reduce_metric,
    significance_stars,
    welch_t_test,
)
from app.core.errors import AxisTooSmallError, RaggedTensorError, TooSmallError
from app.core.synth import OracleConfig, generate_design_matrix


def _random_matrix(shape: tuple[int, int, int, int], seed: int = 0) -> DesignMatrix:
    n_designs, n_speeds, n_angles, n_samples = shape
    designs = tuple(
        DesignSpec(design_id=f"d{i}", tip="cone" if i % 2 else "sphere", spacing_mm=0.4 + 0.3 * (i // 2))
        for i in range(n_designs)
    )
    rng = np.random.default_rng(seed)
    return DesignMatrix(
        designs=designs,
        speeds=np.linspace(3.0, 12.0, n_speeds),
        angles=rng.uniform(-30, 30, size=(n_angles, 2)),
        tensor=rng.normal(scale=20.0, size=(n_designs, n_speeds, 5, n_angles, n_samples)),
    )


def _brute_force(matrix: DesignMatrix, metric: DesignMetric) -> list[float]:
    """Loop-by-loop reduction in the fixed axis order: time, angles, sensors, speeds."""
    sensors = [0] if metric.name.startswith("AIRSPEED") else [1, 2, 3, 4]
    d, s, _, a, _ = matrix.shape
    out = []
    for i in range(d):
        per_speed = []
        for j in range(s):
            per_sensor = []
            for k in sensors:
                per_angle = []
                for m in range(a):
                    series = matrix.tensor[i, j, k, m]
                    per_angle.append(np.std(series) if metric.name.endswith("NOISE") else np.mean(series))
                if metric == DesignMetric.ANGULAR_RESOLUTION:
                    per_sensor.append(np.std(per_angle))
                else:
                    per_sensor.append(np.mean(per_angle))
            per_speed.append(np.mean(per_sensor))
        out.append(np.std(per_speed) if metric == DesignMetric.AIRSPEED_RESOLUTION else np.mean(per_speed))
    return out


@pytest.mark.parametrize("metric", list(DesignMetric))
def test_reduction_matches_brute_force(metric: DesignMetric) -> None:
    matrix = _random_matrix((3, 4, 6, 7), seed=2)
    got = reduce_metric(matrix, metric)
    np.testing.assert_allclose(list(got.values()), _brute_force(matrix, metric), rtol=0, atol=1e-12)


def test_airspeed_resolution_is_speed_spread() -> None:
    matrix = _random_matrix((2, 5, 3, 4), seed=4)
    got = reduce_metric(matrix, "airspeed_resolution")
    for i, design in enumerate(matrix.designs):
        speed_means = matrix.tensor[i, :, 0].mean(axis=(1, 2))
        assert got[design.design_id] == pytest.approx(np.std(speed_means), abs=1e-12)


def test_constant_tensor_has_zero_metrics() -> None:
    matrix = _random_matrix((2, 3, 4, 5))
    flat = DesignMatrix(matrix.designs, matrix.speeds, matrix.angles, np.full(matrix.shape, 7.5))
    for metric in DesignMetric:
        assert set(reduce_metric(flat, metric).values()) == {0.0}


def test_offset_and_scale_behaviour() -> None:
    matrix = _random_matrix((2, 3, 4, 5), seed=8)
    shifted = DesignMatrix(matrix.designs, matrix.speeds, matrix.angles, matrix.tensor + 40.0)
    scaled = DesignMatrix(matrix.designs, matrix.speeds, matrix.angles, matrix.tensor * 3.0)
    for metric in DesignMetric:
        base = reduce_metric(matrix, metric)
        np.testing.assert_allclose(list(reduce_metric(shifted, metric).values()), list(base.values()), atol=1e-9)
        np.testing.assert_allclose(
            list(reduce_metric(scaled, metric).values()), [3.0 * v for v in base.values()], rtol=1e-12
        )


def test_missing_cells_are_skipped() -> None:
    matrix = _random_matrix((2, 3, 4, 6), seed=5)
    tensor = matrix.tensor.copy()
    tensor[0, 1, 2, 3, 5] = np.nan
    holey = DesignMatrix(matrix.designs, matrix.speeds, matrix.angles, tensor)
    assert holey.missing_count == 1
    for metric in DesignMetric:
        assert all(math.isfinite(v) for v in reduce_metric(holey, metric).values())


def test_single_speed_axis_too_small() -> None:
    matrix = _random_matrix((2, 1, 4, 5))
    with pytest.raises(AxisTooSmallError):
        reduce_metric(matrix, DesignMetric.AIRSPEED_RESOLUTION)
    reduce_metric(matrix, DesignMetric.ANGULAR_RESOLUTION)


def test_ragged_tensor_rejected() -> None:
    matrix = _random_matrix((2, 3, 4, 5))
    with pytest.raises(RaggedTensorError):
        DesignMatrix(matrix.designs, matrix.speeds, matrix.angles, matrix.tensor[:, :, :4])


def test_welch_reference_values() -> None:
    result = welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    assert result.t == pytest.approx(-1.0)
    assert result.df == pytest.approx(8.0)
    assert result.p == pytest.approx(0.347, abs=1e-3)


def test_welch_identical_and_separated() -> None:
    assert welch_t_test([1.0, 1.0, 1.0], [1.0, 1.0, 1.0]).p == 1.0
    rng = np.random.default_rng(0)
    far = welch_t_test(rng.normal(0, 1, 30), rng.normal(20, 1, 30))
    assert far.p < 1e-6
    with pytest.raises(TooSmallError):
        welch_t_test([1.0], [1.0, 2.0])


@pytest.mark.parametrize(("p", "stars"), [(0.0005, "***"), (0.005, "**"), (0.03, "*"), (0.05, ""), (0.5, "")])
def test_significance_stars(p: float, stars: str) -> None:
    assert significance_stars(p) == stars


def test_full_design_matrix_size() -> None:
    designs = default_designs()
    assert len(designs) == 8
    assert len(default_design_angles()) == 81
    assert len(designs) * 4 * 5 * 81 * 70 == 907_200


def test_compare_designs_separates_tips() -> None:
    matrix = generate_design_matrix(
        speeds=(6.0, 12.0), angle_grid=default_design_angles(60.0, 3), samples=10, base=OracleConfig(noise_sigma=0.3)
    )
    report = compare_designs(matrix, max_workers=2)
    assert report.shape == (8, 2, 5, 9, 10)
    assert report.missing_cells == 0
    assert set(report.metrics) == {d.design_id for d in default_designs()}
    (tip,) = report.tests_for(DesignMetric.AIRSPEED_RESOLUTION, "tip")
    assert (tip.group_a, tip.group_b) == ("cone", "sphere")
    assert tip.mean_a > tip.mean_b
    assert tip.p < 0.05
    assert tip.stars
    # 4 spacings give 6 pairs per metric
    assert len(report.tests_for(DesignMetric.ANGULAR_NOISE, "spacing")) == 6


def test_compare_needs_two_designs() -> None:
    with pytest.raises(TooSmallError):
        compare_designs(_random_matrix((1, 3, 4, 5)))
