"""Selection of (h, lambda) on the standardized response scale.

The criterion for each candidate pair is

    Loss(lam, h) = CV*(lam, h) + weight * sum_{j in C} (m*(X_j) - Y*_j)^2

with CV* the K-fold prediction error of the stochastic observations. Waypoints are
noiseless, so they stay in every training fold and are never validated.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from sklearn.model_selection import KFold

from .constrained import AnwConfig
from .errors import DegenerateResponseError, InfeasibleGridError, InvalidConfigError, ZeroMassError
from .kernels import Dataset, KernelFamily, KernelSpec
from .sharpening import dsanw_fit

logger = logging.getLogger(__name__)

DEFAULT_FOLDS = 5
DEFAULT_LAMBDA_GRID = (1.0, 10.0, 100.0, 1000.0)


@dataclass(frozen=True, eq=False)
class StandardizedView:
    y_star: NDArray[np.float64]
    mean: float
    sd: float

    def invert(self, values: ArrayLike) -> NDArray[np.float64]:
        return self.mean + self.sd * np.asarray(values, dtype=float)


@dataclass(frozen=True)
class LossCell:
    h: float
    lam: float
    cv_error: float
    waypoint_penalty: float
    total: float
    feasible: bool = True


@dataclass(frozen=True)
class TuningResult:
    best_h: float
    best_lambda: float
    loss_surface: tuple[LossCell, ...]
    folds: int
    seed: int
    sharpen_steps: int = 0

    @property
    def best(self) -> LossCell:
        return next(c for c in self.loss_surface if c.h == self.best_h and c.lam == self.best_lambda)

    def surface_records(self) -> list[dict]:
        return [asdict(cell) for cell in self.loss_surface]


def standardize(ys: ArrayLike) -> StandardizedView:
    ys = np.asarray(ys, dtype=float)
    if ys.size < 2:
        raise DegenerateResponseError("standardization needs at least two responses")
    mean = float(ys.mean())
    sd = float(ys.std())
    if sd == 0.0:
        raise DegenerateResponseError("responses are constant; standard deviation is zero")
    return StandardizedView((ys - mean) / sd, mean, sd)


def default_h_grid(xs: ArrayLike, size: int = 10) -> NDArray[np.float64]:
    """Log-spaced bandwidths from range/n^(4/5) to range/4."""
    xs = np.asarray(xs, dtype=float)
    span = float(np.ptp(xs))
    if span <= 0.0:
        raise InvalidConfigError("covariates have zero range; cannot build a bandwidth grid")
    return np.geomspace(span / xs.size**0.8, span / 4.0, size)


def fold_assignment(data: Dataset, folds: int, seed: int) -> list[NDArray[np.intp]]:
    """Validation index sets (into the full dataset) over the stochastic observations only."""
    stochastic = data.stochastic_indices
    if folds < 2:
        raise InvalidConfigError(f"need at least 2 folds, got {folds}")
    if folds > stochastic.size:
        raise InvalidConfigError(f"{folds} folds requested but only {stochastic.size} stochastic observations")
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    return [stochastic[held_out] for _, held_out in splitter.split(stochastic)]


def _cv_standardized(
    data: Dataset, cfg: AnwConfig, validation: Sequence[NDArray[np.intp]], sharpen_steps: int
) -> float:
    squared = 0.0
    count = 0
    everything = np.arange(data.n)
    for fold, held_out in enumerate(validation):
        train = data.subset(np.setdiff1d(everything, held_out))
        try:
            predicted = dsanw_fit(train, cfg, sharpen_steps, data.xs[held_out]).values
        except ZeroMassError as exc:
            raise ZeroMassError(exc.x, fold=fold) from exc
        squared += float(np.sum((predicted - data.ys[held_out]) ** 2))
        count += held_out.size
    return squared / count


def cv_error(
    data: Dataset, cfg: AnwConfig, folds: int = DEFAULT_FOLDS, seed: int = 0, sharpen_steps: int = 0
) -> float:
    """Mean squared K-fold prediction error over the stochastic observations, standardized scale."""
    view = standardize(data.ys)
    standardized = data.with_responses(view.y_star)
    return _cv_standardized(standardized, cfg, fold_assignment(data, folds, seed), sharpen_steps)


def waypoint_penalty(data: Dataset, cfg: AnwConfig, sharpen_steps: int = 0) -> float:
    if not data.q:
        return 0.0
    constrained = list(data.constraint_set)
    fitted = dsanw_fit(data, cfg, sharpen_steps, data.xs[constrained]).values
    return float(np.sum((fitted - data.ys[constrained]) ** 2))


def tune(
    data: Dataset,
    kernel_family: KernelFamily | str = KernelFamily.GAUSSIAN,
    h_grid: ArrayLike | None = None,
    lambda_grid: ArrayLike | None = None,
    folds: int = DEFAULT_FOLDS,
    seed: int = 0,
    penalty_weight: float = 1.0,
    sharpen_steps: int = 0,
    max_workers: int | None = None,
) -> TuningResult:
    """Grid search of Loss(lam, h); ties go to the smaller lambda, then the smaller h.

    Cells where some fold has zero kernel mass are kept in the surface with an infinite
    loss and ``feasible=False``.
    """
    family = KernelFamily.parse(kernel_family)
    h_values = default_h_grid(data.xs) if h_grid is None else np.atleast_1d(np.asarray(h_grid, dtype=float))
    lam_values = np.atleast_1d(np.asarray(DEFAULT_LAMBDA_GRID if lambda_grid is None else lambda_grid, dtype=float))
    if h_values.size == 0 or lam_values.size == 0:
        raise InvalidConfigError("tuning grids must be nonempty")
    if penalty_weight < 0:
        raise InvalidConfigError("penalty weight must be nonnegative")

    standardized = data.with_responses(standardize(data.ys).y_star)
    validation = fold_assignment(data, folds, seed)

    def evaluate(cell: tuple[float, float]) -> LossCell:
        h, lam = cell
        cfg = AnwConfig(KernelSpec(family, h), lam)
        try:
            cv = _cv_standardized(standardized, cfg, validation, sharpen_steps)
            penalty = waypoint_penalty(standardized, cfg, sharpen_steps)
        except ZeroMassError as exc:
            logger.warning("Infeasible tuning cell h=%g lambda=%g: %s", h, lam, exc)
            return LossCell(h, lam, math.inf, math.inf, math.inf, feasible=False)
        return LossCell(h, lam, cv, penalty, cv + penalty_weight * penalty)

    cells = [(float(h), float(lam)) for h in h_values for lam in lam_values]
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            surface = tuple(pool.map(evaluate, cells))
    else:
        surface = tuple(evaluate(cell) for cell in cells)

    feasible = [cell for cell in surface if cell.feasible]
    if not feasible:
        raise InfeasibleGridError("every (h, lambda) cell hit zero kernel mass; widen the bandwidth grid")
    best = min(feasible, key=lambda cell: (cell.total, cell.lam, cell.h))
    logger.info("Selected h=%g lambda=%g (loss %.6g) from %d cells", best.h, best.lam, best.total, len(surface))
    return TuningResult(best.h, best.lam, surface, folds, seed, sharpen_steps)
