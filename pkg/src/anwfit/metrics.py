"""Evaluation metrics: RMSE, waypoint error, curvature smoothness and the composite score (CSS)."""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import asdict, dataclass, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import cKDTree

from .errors import (
    EmptyConstraintsError,
    InvalidConfigError,
    LengthMismatchError,
    NonUniformGridError,
    TooFewPointsError,
)
from .kernels import FittedCurve


@dataclass(frozen=True)
class CssConfig:
    tau_c: float = 0.10
    tau_g: float = 0.05
    tau_s: float | None = None  # median smoothness of the candidates under comparison
    w_c: float = 0.5
    w_g: float = 0.3
    w_s: float = 0.2

    def __post_init__(self):
        for name in ("tau_c", "tau_g"):
            if not getattr(self, name) > 0:
                raise InvalidConfigError(f"{name} must be positive")
        if self.tau_s is not None and not self.tau_s > 0:
            raise InvalidConfigError("tau_s must be positive")
        if min(self.w_c, self.w_g, self.w_s) < 0:
            raise InvalidConfigError("CSS weights must be nonnegative")

    def with_median_smoothness(self, smoothness_values: Iterable[float]) -> CssConfig:
        values = np.asarray(list(smoothness_values), dtype=float)
        if values.size == 0:
            raise InvalidConfigError("need at least one candidate to derive tau_s")
        tau_s = float(np.median(values))
        if tau_s <= 0:
            # at least half the candidates are perfectly straight
            tau_s = float(values.max()) if values.max() > 0 else 1.0
        return replace(self, tau_s=tau_s)


@dataclass(frozen=True)
class MetricsReport:
    rmse: float
    waypoint_error: float
    smoothness: float
    css: float
    css_config: CssConfig

    def to_record(self) -> dict[str, float]:
        """Flat key-value form with the CSS settings echoed."""
        record = {
            "rmse": self.rmse,
            "waypoint_error": self.waypoint_error,
            "smoothness": self.smoothness,
            "css": self.css,
        }
        record.update(asdict(self.css_config))
        return record

    @classmethod
    def from_record(cls, record: dict) -> MetricsReport:
        cfg = CssConfig(**{key: record[key] for key in ("tau_c", "tau_g", "tau_s", "w_c", "w_g", "w_s")})
        return cls(record["rmse"], record["waypoint_error"], record["smoothness"], record["css"], cfg)


def _values(curve: FittedCurve | ArrayLike) -> NDArray[np.float64]:
    if isinstance(curve, FittedCurve):
        return curve.values
    return np.asarray(curve, dtype=float)


def rmse(fitted: FittedCurve | ArrayLike, truth: ArrayLike) -> float:
    fitted = _values(fitted)
    truth = np.asarray(truth, dtype=float)
    if fitted.shape != truth.shape:
        raise LengthMismatchError(f"fitted has {fitted.size} values, truth has {truth.size}")
    return float(np.sqrt(np.mean((fitted - truth) ** 2)))


def waypoint_error(fitted_at_waypoints: ArrayLike, waypoint_ys: ArrayLike) -> float:
    """Root mean squared deviation over the constrained points."""
    fitted = np.asarray(fitted_at_waypoints, dtype=float)
    target = np.asarray(waypoint_ys, dtype=float)
    if target.size == 0:
        raise EmptyConstraintsError("waypoint error needs at least one constrained point")
    if fitted.shape != target.shape:
        raise LengthMismatchError(f"{fitted.size} fitted values for {target.size} waypoints")
    return float(np.sqrt(np.mean((fitted - target) ** 2)))


def _check_uniform(grid: NDArray[np.float64]) -> float:
    steps = np.diff(grid)
    dx = float(steps.mean())
    if not dx > 0 or not np.allclose(steps, dx, rtol=1e-6, atol=0.0):
        raise NonUniformGridError("smoothness needs a uniform, increasing evaluation grid")
    return dx


def smoothness(fitted: FittedCurve | ArrayLike, grid: ArrayLike | None = None) -> float:
    """Trapezoid approximation of the integral of (m'')^2 over the evaluation grid.

    Second derivatives are central differences at interior points; each end point reuses
    its neighbour's value.
    """
    values = _values(fitted)
    if grid is None:
        if not isinstance(fitted, FittedCurve):
            raise InvalidConfigError("smoothness of bare values needs an explicit grid")
        grid = fitted.grid
    grid = np.asarray(grid, dtype=float)
    if values.size < 3:
        raise TooFewPointsError("smoothness needs at least three grid points")
    if grid.shape != values.shape:
        raise LengthMismatchError("grid and fitted values differ in length")
    dx = _check_uniform(grid)
    second = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / dx**2
    second = np.pad(second, 1, mode="edge")
    return float(np.trapezoid(second**2, dx=dx))


def phi(x: ArrayLike) -> NDArray[np.float64] | float:
    result = np.maximum(0.0, np.asarray(x, dtype=float) - 1.0)
    return float(result) if result.ndim == 0 else result


def css(rmse_value: float, waypoint_error_value: float, smoothness_value: float, cfg: CssConfig) -> float:
    if cfg.tau_s is None:
        raise InvalidConfigError("tau_s is unresolved; call CssConfig.with_median_smoothness first")
    return float(
        cfg.w_c * phi(waypoint_error_value / cfg.tau_c)
        + cfg.w_g * phi(rmse_value / cfg.tau_g)
        + cfg.w_s * phi(smoothness_value / cfg.tau_s)
    )


def report(rmse_value: float, waypoint_error_value: float, smoothness_value: float, cfg: CssConfig) -> MetricsReport:
    values = (rmse_value, waypoint_error_value, smoothness_value)
    if not all(math.isfinite(v) and v >= 0 for v in values):
        raise InvalidConfigError(f"metrics must be finite and nonnegative, got {values}")
    return MetricsReport(*values, css(*values, cfg), cfg)


def interior_mask(grid: ArrayLike, margin: float) -> NDArray[np.bool_]:
    """Grid points at least ``margin`` away from both ends."""
    grid = np.asarray(grid, dtype=float)
    return (grid >= grid[0] + margin) & (grid <= grid[-1] - margin)


def cross_track_rmse(points: ArrayLike, reference: ArrayLike) -> float:
    """RMS distance from each fitted point to its nearest vertex on a (dense) reference polyline."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    reference = np.asarray(reference, dtype=float).reshape(-1, 2)
    distances, _ = cKDTree(reference).query(points)
    return float(np.sqrt(np.mean(distances**2)))
