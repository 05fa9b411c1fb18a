"""Fixed-waypoint estimators: the naive bandwidth-shrinking baseline and adaptive NW (ANW).

ANW keeps the global bandwidth and multiplies the kernel weight of every constrained
observation by ``lam >= 1``::

    m(x) = (sum_D w_i Y_i + sum_C lam w_i Y_i) / (sum_D w_i + sum_C lam w_i)

which is the minimiser of the weighted local-constant least squares criterion. ``lam = 1``
is plain NW; ``lam -> inf`` forces the curve through the waypoints without shrinking the
averaging window.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidConfigError, NotAConstraintError
from .kernels import Dataset, FittedCurve, KernelSpec, as_grid, weighted_average


@dataclass(frozen=True)
class AnwConfig:
    spec: KernelSpec
    lam: float = 1.0

    def __post_init__(self):
        if not (self.lam >= 1.0 and math.isfinite(self.lam)):
            raise InvalidConfigError(f"lambda must be a finite value >= 1, got {self.lam!r}")

    def describe(self) -> dict[str, float | str]:
        return {"kernel": str(self.spec.family), "h": self.spec.h, "lambda": self.lam}


@dataclass(frozen=True)
class NaiveConfig:
    spec: KernelSpec
    gamma: float = 0.5
    radius: float | None = None  # defaults to h

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidConfigError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        if self.radius is not None and not self.radius > 0.0:
            raise InvalidConfigError(f"radius must be positive, got {self.radius!r}")

    @property
    def r_h(self) -> float:
        return self.spec.h if self.radius is None else self.radius


def adapted_multipliers(n: int, constraint_set: Sequence[int], lam: float | ArrayLike) -> NDArray[np.float64]:
    """Per-observation weight multipliers: 1 on D and lam (scalar or one value per waypoint) on C."""
    multipliers = np.ones(n)
    if len(constraint_set) == 0:
        return multipliers
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (len(constraint_set),))
    if np.any(lam < 1.0):
        raise InvalidConfigError("waypoint multipliers must be >= 1")
    multipliers[list(constraint_set)] = lam
    return multipliers


def anw_weights(data: Dataset, cfg: AnwConfig, at: NDArray[np.float64], lam: float | ArrayLike | None = None):
    lam = cfg.lam if lam is None else lam
    return cfg.spec.weights(at, data.xs) * adapted_multipliers(data.n, data.constraint_set, lam)


def anw_fit(data: Dataset, cfg: AnwConfig, grid: ArrayLike, lam: float | ArrayLike | None = None) -> FittedCurve:
    """ANW estimate on ``grid``; ``lam`` optionally overrides cfg.lam with per-waypoint values."""
    grid = as_grid(grid)
    values = weighted_average(anw_weights(data, cfg, grid, lam), grid, data.ys)
    return FittedCurve(grid, values, method="ANW", config=cfg.describe())


def anw_smoother_matrix(data: Dataset, cfg: AnwConfig) -> NDArray[np.float64]:
    """Row-normalised ANW weights at the design points: fitted values are ``S @ ys``."""
    weights = anw_weights(data, cfg, data.xs)
    return weights / weights.sum(axis=1, keepdims=True)


def anw_waypoint_gap(data: Dataset, cfg: AnwConfig, j: int) -> float:
    if j not in data.constraint_set:
        raise NotAConstraintError(j)
    fitted = anw_fit(data, cfg, [data.xs[j]]).values[0]
    return float(abs(fitted - data.ys[j]))


def naive_fit(data: Dataset, cfg: NaiveConfig, grid: ArrayLike) -> FittedCurve:
    """Bandwidth-shrinking baseline.

    At an evaluation point within ``r_h`` of any constrained location every observation
    weight uses ``gamma * h``; elsewhere the global ``h`` is used.
    """
    grid = as_grid(grid)
    weights = cfg.spec.weights(grid, data.xs)
    if data.q:
        waypoints = data.xs[list(data.constraint_set)]
        near = np.any(np.abs(grid[:, None] - waypoints[None, :]) <= cfg.r_h, axis=1)
        if cfg.gamma != 1.0 and near.any():
            shrunk = KernelSpec(cfg.spec.family, cfg.gamma * cfg.spec.h)
            weights[near] = shrunk.weights(grid[near], data.xs)
    values = weighted_average(weights, grid, data.ys)
    config = {"kernel": str(cfg.spec.family), "h": cfg.spec.h, "gamma": cfg.gamma, "r_h": cfg.r_h}
    return FittedCurve(grid, values, method="Naive", config=config)
