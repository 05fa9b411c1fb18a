import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from anwfit.constrained import AnwConfig, anw_fit
from anwfit.errors import DegenerateResponseError, InfeasibleGridError, InvalidConfigError, ZeroMassError
from anwfit.kernels import Dataset, KernelSpec, nw_fit
from anwfit.tuning import cv_error, default_h_grid, fold_assignment, standardize, tune, waypoint_penalty


@pytest.fixture
def noisy_dataset(rng):
    xs = np.sort(rng.uniform(0.0, 1.0, 120))
    ys = np.sin(2 * np.pi * xs) + 0.3 * np.cos(6 * np.pi * xs) + rng.normal(0.0, 0.15, 120)
    for j in (30, 90):
        ys[j] = np.sin(2 * np.pi * xs[j]) + 0.3 * np.cos(6 * np.pi * xs[j])
    return Dataset(xs, ys, (30, 90))


def test_standardize_two_points():
    view = standardize([0.0, 2.0])
    assert_array_equal(view.y_star, [-1.0, 1.0])
    assert (view.mean, view.sd) == (1.0, 1.0)


def test_standardize_uses_population_sd():
    view = standardize([1.0, 2.0, 3.0, 4.0])
    assert view.mean == 2.5
    assert view.sd == pytest.approx(math.sqrt(1.25), rel=1e-15)
    assert view.y_star.mean() == pytest.approx(0.0, abs=1e-15)
    assert view.y_star.var() == pytest.approx(1.0, rel=1e-14)
    assert_allclose(view.invert(view.y_star), [1.0, 2.0, 3.0, 4.0], rtol=1e-15)


def test_standardize_constant_responses():
    with pytest.raises(DegenerateResponseError):
        standardize([5.0, 5.0, 5.0])


def test_folds_cover_stochastic_points_only(noisy_dataset):
    validation = fold_assignment(noisy_dataset, 5, seed=3)
    held_out = np.concatenate(validation)
    assert len(validation) == 5
    assert sorted(held_out) == list(noisy_dataset.stochastic_indices)
    assert not set(held_out) & set(noisy_dataset.constraint_set)


def test_folds_are_seeded(noisy_dataset):
    first = fold_assignment(noisy_dataset, 5, seed=7)
    again = fold_assignment(noisy_dataset, 5, seed=7)
    other = fold_assignment(noisy_dataset, 5, seed=8)
    assert all(np.array_equal(a, b) for a, b in zip(first, again))
    assert not all(np.array_equal(a, b) for a, b in zip(first, other))


@pytest.mark.parametrize("folds", [1, 200])
def test_fold_count_is_checked(noisy_dataset, folds):
    with pytest.raises(InvalidConfigError):
        fold_assignment(noisy_dataset, folds, seed=0)


def test_cv_matches_explicit_fold_loop(rng):
    xs = np.sort(rng.uniform(0.0, 1.0, 20))
    ys = np.cos(5 * xs) + rng.normal(0.0, 0.1, 20)
    data = Dataset(xs, ys, (4, 15))
    cfg = AnwConfig(KernelSpec("gaussian", 0.1), 10.0)
    y_star = (ys - ys.mean()) / ys.std()
    squared = []
    for held_out in fold_assignment(data, 4, seed=11):
        keep = np.setdiff1d(np.arange(20), held_out)
        train = Dataset(xs[keep], y_star[keep], tuple(np.flatnonzero(np.isin(keep, [4, 15]))))
        squared.extend((anw_fit(train, cfg, xs[held_out]).values - y_star[held_out]) ** 2)
    assert cv_error(data, cfg, folds=4, seed=11) == pytest.approx(np.mean(squared), rel=1e-12)


def test_leave_one_out_matches_refits():
    xs = np.array([0.0, 0.3, 0.5, 0.8, 1.0])
    ys = np.array([0.1, 0.7, 0.4, -0.2, 0.3])
    spec = KernelSpec("gaussian", 0.4)
    y_star = (ys - ys.mean()) / ys.std()
    errors = []
    for i in range(5):
        keep = [k for k in range(5) if k != i]
        errors.append((nw_fit(Dataset(xs[keep], y_star[keep]), spec, [xs[i]]).values[0] - y_star[i]) ** 2)
    assert cv_error(Dataset(xs, ys), AnwConfig(spec), folds=5) == pytest.approx(np.mean(errors), rel=1e-12)


def test_cv_error_prefers_local_fit_on_noiseless_line():
    xs = np.linspace(0.0, 1.0, 50)
    data = Dataset(xs, 2.0 * xs + 1.0)
    local = cv_error(data, AnwConfig(KernelSpec("gaussian", 0.03)), folds=5)
    global_ = cv_error(data, AnwConfig(KernelSpec("gaussian", 1.0)), folds=5)
    assert local < global_


def test_cv_zero_mass_names_the_fold():
    data = Dataset(np.arange(10.0), np.arange(10.0))
    with pytest.raises(ZeroMassError) as excinfo:
        cv_error(data, AnwConfig(KernelSpec("epanechnikov", 0.1)), folds=5)
    assert excinfo.value.fold is not None


def test_penalty_without_constraints_is_zero(noisy_dataset):
    free = Dataset(noisy_dataset.xs, noisy_dataset.ys)
    assert waypoint_penalty(free, AnwConfig(KernelSpec("gaussian", 0.05), 100.0)) == 0.0


def test_default_bandwidth_grid():
    grid = default_h_grid(np.linspace(0.0, 1.0, 100))
    assert grid.size == 10
    assert grid[0] == pytest.approx(100**-0.8, rel=1e-12)
    assert grid[-1] == pytest.approx(0.25, rel=1e-12)
    assert np.all(np.diff(grid) > 0)


def test_single_cell_grid(noisy_dataset):
    result = tune(noisy_dataset, h_grid=[0.05], lambda_grid=[10.0])
    assert (result.best_h, result.best_lambda) == (0.05, 10.0)
    assert len(result.loss_surface) == 1
    cell = result.best
    assert cell.total == pytest.approx(cell.cv_error + cell.waypoint_penalty, rel=1e-15)


def test_without_constraints_smallest_lambda_wins(noisy_dataset):
    free = Dataset(noisy_dataset.xs, noisy_dataset.ys)
    result = tune(free, h_grid=[0.03, 0.05], lambda_grid=[1000.0, 10.0, 1.0, 100.0])
    assert result.best_lambda == 1.0
    for cell in result.loss_surface:
        assert cell.waypoint_penalty == 0.0
        assert cell.total == cell.cv_error


def test_selected_lambda_does_not_increase_penalty(noisy_dataset):
    result = tune(noisy_dataset, h_grid=[0.02, 0.03, 0.04, 0.05, 0.06], lambda_grid=[1.0, 10.0, 100.0, 1000.0])
    at_one = next(c for c in result.loss_surface if c.h == result.best_h and c.lam == 1.0)
    assert result.best.waypoint_penalty <= at_one.waypoint_penalty


def test_surface_is_deterministic_and_thread_safe(noisy_dataset):
    grid = dict(h_grid=[0.03, 0.06, 0.1], lambda_grid=[1.0, 100.0], seed=5)
    first = tune(noisy_dataset, **grid)
    assert tune(noisy_dataset, **grid).loss_surface == first.loss_surface
    assert tune(noisy_dataset, max_workers=4, **grid).loss_surface == first.loss_surface


def test_selection_ignores_affine_rescaling(noisy_dataset):
    grid = dict(h_grid=[0.02, 0.04, 0.08], lambda_grid=[1.0, 10.0, 100.0, 1000.0], seed=2)
    base = tune(noisy_dataset, **grid)
    scaled = tune(noisy_dataset.with_responses(3.7 * noisy_dataset.ys - 12.0), **grid)
    assert (scaled.best_h, scaled.best_lambda) == (base.best_h, base.best_lambda)


def test_sharpened_tuning_is_recorded(noisy_dataset):
    result = tune(noisy_dataset, h_grid=[0.05], lambda_grid=[10.0], sharpen_steps=2)
    plain = tune(noisy_dataset, h_grid=[0.05], lambda_grid=[10.0])
    assert result.sharpen_steps == 2
    assert result.best.cv_error != plain.best.cv_error


def test_infeasible_cells_are_kept_in_surface():
    data = Dataset(np.arange(10.0), np.arange(10.0) ** 2)
    result = tune(data, "epanechnikov", h_grid=[0.1, 3.0], lambda_grid=[1.0])
    infeasible = next(c for c in result.loss_surface if c.h == 0.1)
    assert not infeasible.feasible
    assert math.isinf(infeasible.total)
    assert result.best_h == 3.0


def test_all_cells_infeasible():
    data = Dataset(np.arange(10.0), np.arange(10.0))
    with pytest.raises(InfeasibleGridError):
        tune(data, "epanechnikov", h_grid=[0.1, 0.5], lambda_grid=[1.0, 10.0])
