"""Kernel functions, kernel weights and the plain Nadaraya-Watson estimator.

Every estimator in the package is a weighted average of responses with weights
``w_i(x; h) = K((x - X_i) / h) / h``; the constrained and sharpened estimators only
change how those weights are scaled or which responses they average.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ._compat import StrEnum
from .errors import InvalidConfigError, ZeroMassError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class KernelFamily(StrEnum):
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"

    @classmethod
    def parse(cls, value: str | KernelFamily) -> KernelFamily:
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidConfigError(f"unknown kernel family: {value!r}") from None


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily = KernelFamily.GAUSSIAN
    h: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily.parse(self.family))
        if not (math.isfinite(self.h) and self.h > 0):
            raise InvalidConfigError(f"bandwidth must be positive, got {self.h!r}")

    def profile(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """K(u) for the configured family."""
        if self.family is KernelFamily.GAUSSIAN:
            return _INV_SQRT_2PI * np.exp(-0.5 * u * u)
        return 0.75 * np.maximum(0.0, 1.0 - u * u)

    def weights(self, at: ArrayLike, xs: ArrayLike) -> NDArray[np.float64]:
        """Matrix of w_i(x; h) with one row per evaluation point and one column per observation."""
        at = np.atleast_1d(np.asarray(at, dtype=float))
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        u = (at[:, None] - xs[None, :]) / self.h
        return self.profile(u) / self.h


@dataclass(frozen=True, eq=False)
class Dataset:
    """Paired covariate/response samples; ``constraint_set`` flags the fixed waypoints (C)."""

    xs: NDArray[np.float64]
    ys: NDArray[np.float64]
    constraint_set: tuple[int, ...] = ()

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float).reshape(-1)
        ys = np.array(self.ys, dtype=float).reshape(-1)
        if xs.size == 0:
            raise InvalidConfigError("dataset needs at least one observation")
        if xs.size != ys.size:
            raise InvalidConfigError(f"xs and ys differ in length ({xs.size} != {ys.size})")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise InvalidConfigError("dataset values must be finite")
        constraints = tuple(sorted({int(j) for j in self.constraint_set}))
        if constraints and (constraints[0] < 0 or constraints[-1] >= xs.size):
            raise InvalidConfigError("constraint index out of range")
        if len(constraints) >= xs.size:
            raise InvalidConfigError("at least one observation must be stochastic (q < n)")
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "constraint_set", constraints)

    @property
    def n(self) -> int:
        return int(self.xs.size)

    @property
    def q(self) -> int:
        return len(self.constraint_set)

    @property
    def constraint_mask(self) -> NDArray[np.bool_]:
        mask = np.zeros(self.n, dtype=bool)
        mask[list(self.constraint_set)] = True
        return mask

    @property
    def stochastic_indices(self) -> NDArray[np.intp]:
        return np.flatnonzero(~self.constraint_mask)

    def with_responses(self, ys: ArrayLike) -> Dataset:
        return Dataset(self.xs, ys, self.constraint_set)

    def subset(self, indices: Iterable[int]) -> Dataset:
        """Dataset restricted to ``indices``; constraint flags follow their observations."""
        indices = np.asarray(list(indices), dtype=int)
        flagged = self.constraint_mask[indices]
        return Dataset(self.xs[indices], self.ys[indices], tuple(np.flatnonzero(flagged)))


@dataclass(frozen=True, eq=False)
class FittedCurve:
    grid: NDArray[np.float64]
    values: NDArray[np.float64]
    method: str = "NW"
    config: dict[str, Any] = field(default_factory=dict)
    iterations: int = 0


def as_grid(grid: ArrayLike) -> NDArray[np.float64]:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise InvalidConfigError("evaluation grid is empty")
    return grid


def uniform_grid(lo: float, hi: float, size: int = 1001) -> NDArray[np.float64]:
    if size < 1:
        raise InvalidConfigError("grid size must be positive")
    return np.linspace(lo, hi, size)


def kernel_weight(spec: KernelSpec, x: float, xi: float) -> float:
    return float(spec.weights([x], [xi])[0, 0])


def weighted_average(weights: NDArray[np.float64], at: NDArray[np.float64], ys: NDArray[np.float64]):
    """Row-wise weighted average of ``ys``; raises ZeroMassError at the first empty row."""
    mass = weights.sum(axis=1)
    empty = np.flatnonzero(mass <= 0.0)
    if empty.size:
        raise ZeroMassError(at[empty[0]])
    return (weights @ ys) / mass


def nw_fit(data: Dataset, spec: KernelSpec, grid: ArrayLike) -> FittedCurve:
    grid = as_grid(grid)
    values = weighted_average(spec.weights(grid, data.xs), grid, data.ys)
    return FittedCurve(grid, values, method="NW", config={"kernel": str(spec.family), "h": spec.h})
