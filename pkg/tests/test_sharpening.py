import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from anwfit.constrained import AnwConfig, anw_fit, anw_smoother_matrix
from anwfit.errors import InvalidConfigError
from anwfit.kernels import Dataset, KernelSpec
from anwfit.sharpening import SharpenState, dsanw_fit, ids2_step, sharpen


def matrix_oracle(data: Dataset, cfg: AnwConfig, M: int) -> np.ndarray:
    smoother = anw_smoother_matrix(data, cfg)
    residual_map = np.eye(data.n) - smoother
    total = np.zeros(data.n)
    term = data.ys.copy()
    for _ in range(M + 1):
        total += term
        term = residual_map @ term
    return smoother @ total


def test_design_point_fits_match_matrix_oracle(rng):
    for _ in range(50):
        n = int(rng.integers(4, 51))
        M = int(rng.integers(0, 4))
        xs = rng.uniform(0.0, 1.0, n)
        ys = np.sin(4 * xs) + rng.normal(0.0, 0.3, n)
        data = Dataset(xs, ys, tuple(rng.choice(n, size=min(2, n - 1), replace=False)))
        cfg = AnwConfig(KernelSpec("gaussian", float(rng.uniform(0.05, 0.3))), float(rng.choice([1.0, 10.0, 100.0])))
        fitted = dsanw_fit(data, cfg, M, xs).values
        assert_allclose(fitted, matrix_oracle(data, cfg, M), rtol=0, atol=1e-10)


def test_two_steps_follow_closed_form(random_dataset):
    data = random_dataset(n=5, q=1)
    cfg = AnwConfig(KernelSpec("gaussian", 0.2), 10.0)
    residual_map = np.eye(5) - anw_smoother_matrix(data, cfg)
    expected = data.ys + residual_map @ data.ys + residual_map @ residual_map @ data.ys
    state = sharpen(data, cfg, 2)
    assert state.k == 2
    assert_allclose(state.current_ys, expected, atol=1e-12)
    assert_array_equal(state.original_ys, data.ys)


def test_zero_steps_is_anw(wavy_dataset):
    cfg = AnwConfig(KernelSpec("gaussian", 0.05), 100.0)
    grid = np.linspace(0.0, 1.0, 57)
    curve = dsanw_fit(wavy_dataset, cfg, 0, grid)
    assert_array_equal(curve.values, anw_fit(wavy_dataset, cfg, grid).values)
    assert curve.method == "ANW"
    assert curve.iterations == 0


def test_sharpened_curve_provenance(wavy_dataset):
    curve = dsanw_fit(wavy_dataset, AnwConfig(KernelSpec("gaussian", 0.05), 100.0), 3, [0.5])
    assert curve.method == "DS-ANW(M=3)"
    assert curve.iterations == 3
    assert curve.config == {"kernel": "gaussian", "h": 0.05, "lambda": 100.0, "M": 3}


def test_constant_responses_are_fixed_points():
    data = Dataset(np.linspace(0.0, 1.0, 12), np.full(12, 0.7), (4,))
    state = sharpen(data, AnwConfig(KernelSpec("gaussian", 0.3), 50.0), 4)
    assert_allclose(state.current_ys, 0.7, rtol=1e-13)


def test_interpolating_smoother_resets_to_original():
    data = Dataset([0.0, 1.0, 2.0, 3.0], [1.0, -1.0, 2.0, 0.5])
    cfg = AnwConfig(KernelSpec("gaussian", 0.01))
    state = SharpenState(data.ys, np.array([3.0, 3.0, 3.0, 3.0]), 4)
    stepped = ids2_step(data, cfg, state)
    assert_allclose(stepped.current_ys, data.ys, atol=1e-12)
    assert stepped.k == 5


def test_sharpening_reduces_peak_bias():
    xs = np.linspace(0.0, 1.0, 401)
    data = Dataset(xs, np.sin(2 * np.pi * xs))
    cfg = AnwConfig(KernelSpec("gaussian", 0.05))
    peak = [0.25]
    plain = dsanw_fit(data, cfg, 0, peak).values[0]
    sharpened = dsanw_fit(data, cfg, 2, peak).values[0]
    assert abs(sharpened - 1.0) < abs(plain - 1.0)


def test_negative_steps_rejected(wavy_dataset):
    with pytest.raises(InvalidConfigError):
        sharpen(wavy_dataset, AnwConfig(KernelSpec("gaussian", 0.1)), -1)


def test_state_must_match_dataset(wavy_dataset):
    state = SharpenState(np.zeros(3), np.zeros(3))
    with pytest.raises(InvalidConfigError):
        ids2_step(wavy_dataset, AnwConfig(KernelSpec("gaussian", 0.1)), state)


@pytest.mark.parametrize("M", [1, 2, 3])
def test_sharpened_fit_is_linear_in_responses(rng, M):
    xs = np.sort(rng.uniform(0.0, 1.0, 40))
    first = np.sin(3 * xs) + rng.normal(0.0, 0.2, 40)
    second = rng.normal(0.0, 1.0, 40)
    cfg = AnwConfig(KernelSpec("gaussian", 0.1), 100.0)
    grid = np.linspace(0.0, 1.0, 23)

    def fit(ys):
        return dsanw_fit(Dataset(xs, ys, (5, 30)), cfg, M, grid).values

    assert_allclose(fit(2.0 * first - 3.0 * second), 2.0 * fit(first) - 3.0 * fit(second), rtol=0, atol=1e-10)


def test_residuals_are_added_to_original_responses(rng):
    xs = np.sort(rng.uniform(0.0, 1.0, 30))
    data = Dataset(xs, np.cos(4 * xs) + rng.normal(0.0, 0.3, 30), (12,))
    cfg = AnwConfig(KernelSpec("gaussian", 0.1), 10.0)
    smoother = anw_smoother_matrix(data, cfg)
    compounding = data.ys.copy()
    for _ in range(2):
        compounding = compounding + (compounding - smoother @ compounding)
    sharpened = sharpen(data, cfg, 2).current_ys
    assert np.max(np.abs(sharpened - compounding)) > 0.05
    assert_allclose(compounding - sharpened, data.ys - smoother @ data.ys, atol=1e-12)


def test_unit_eigenvector_is_left_unchanged(rng):
    xs = np.sort(rng.uniform(0.0, 1.0, 25))
    cfg = AnwConfig(KernelSpec("gaussian", 0.15), 50.0)
    smoother = anw_smoother_matrix(Dataset(xs, np.zeros(25), (8,)), cfg)
    eigenvalues, eigenvectors = np.linalg.eig(smoother)
    unit = np.real(eigenvectors[:, np.argmin(np.abs(eigenvalues - 1.0))])
    assert_allclose(smoother @ unit, unit, atol=1e-10)
    data = Dataset(xs, unit, (8,))
    for M in (1, 2, 3):
        assert_allclose(dsanw_fit(data, cfg, M, xs).values, unit, atol=1e-10)
