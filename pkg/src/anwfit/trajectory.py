"""Two-dimensional tracks: arc-length parameterization, waypoint augmentation,
per-coordinate constrained fitting and the rotate/fit/unrotate route workflow.

Coordinates are treated as planar; lon/lat inputs get no geodesic correction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .constrained import AnwConfig
from .errors import DegenerateTrackError, InvalidConfigError
from .kernels import Dataset, uniform_grid
from .sharpening import dsanw_fit

logger = logging.getLogger(__name__)

SNAP_TOLERANCE = 1e-9


def _as_points(points: ArrayLike) -> NDArray[np.float64]:
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return np.empty((0, 2))
    points = points.reshape(-1, 2)
    if not np.all(np.isfinite(points)):
        raise InvalidConfigError("track coordinates must be finite")
    return points


@dataclass(frozen=True, eq=False)
class Track2D:
    """Ordered observed points plus external fixed waypoints."""

    points: NDArray[np.float64]
    waypoints: NDArray[np.float64] = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))
        object.__setattr__(self, "waypoints", _as_points(self.waypoints))
        if len(self.points) < 2:
            raise InvalidConfigError("a track needs at least two points")


@dataclass(frozen=True, eq=False)
class FlaggedTrack:
    points: NDArray[np.float64]
    constraint_set: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class ParamTrack:
    s: NDArray[np.float64]
    xs: NDArray[np.float64]
    ys: NDArray[np.float64]
    constraint_set: tuple[int, ...] = ()

    @property
    def points(self) -> NDArray[np.float64]:
        return np.column_stack([self.xs, self.ys])

    def coordinate(self, axis: int) -> Dataset:
        return Dataset(self.s, self.xs if axis == 0 else self.ys, self.constraint_set)


@dataclass(frozen=True, eq=False)
class FittedTrack:
    s_grid: NDArray[np.float64]
    xs: NDArray[np.float64]
    ys: NDArray[np.float64]
    config: dict[str, Any]
    iterations: int = 0

    @property
    def points(self) -> NDArray[np.float64]:
        return np.column_stack([self.xs, self.ys])


@dataclass(frozen=True, eq=False)
class FittedRoute:
    """Route fitted in a rotated frame and mapped back to the original coordinates."""

    theta: float
    points: NDArray[np.float64]
    waypoint_fits: NDArray[np.float64]
    waypoint_targets: NDArray[np.float64]
    gaps: NDArray[np.float64]
    dataset: Dataset
    config: dict[str, Any]


def rotate(points: ArrayLike, theta: float) -> NDArray[np.float64]:
    """x' = x cos(theta) - y sin(theta), y' = x sin(theta) + y cos(theta)."""
    points = _as_points(points)
    c, s = math.cos(theta), math.sin(theta)
    return points @ np.array([[c, s], [-s, c]])


def unrotate(points: ArrayLike, theta: float) -> NDArray[np.float64]:
    return rotate(points, -theta)


def augment_waypoints(track: Track2D) -> FlaggedTrack:
    """Insert each external waypoint where it adds the least chord length and flag it.

    A waypoint within SNAP_TOLERANCE of an existing point flags that point instead.
    Original points keep their relative order.
    """
    points = track.points.copy()
    flagged: set[int] = set()
    for waypoint in track.waypoints:
        distance = np.hypot(*(points - waypoint).T)
        nearest = int(np.argmin(distance))
        if distance[nearest] <= SNAP_TOLERANCE:
            flagged.add(nearest)
            continue
        chords = np.hypot(*np.diff(points, axis=0).T)
        detour = distance[:-1] + distance[1:] - chords
        at = int(np.argmin(detour)) + 1
        points = np.insert(points, at, waypoint, axis=0)
        flagged = {j + 1 if j >= at else j for j in flagged}
        flagged.add(at)
    return FlaggedTrack(points, tuple(sorted(flagged)))


def parameterize(track: Track2D | FlaggedTrack) -> ParamTrack:
    """Normalised cumulative chord length s in [0, 1]; external waypoints are augmented first."""
    flagged = augment_waypoints(track) if isinstance(track, Track2D) else track
    chords = np.hypot(*np.diff(flagged.points, axis=0).T)
    total = float(chords.sum())
    if not total > 0.0:
        raise DegenerateTrackError("track has zero total chord length")
    s = np.concatenate([[0.0], np.cumsum(chords)]) / total
    s[-1] = 1.0
    return ParamTrack(s, flagged.points[:, 0].copy(), flagged.points[:, 1].copy(), flagged.constraint_set)


def fit_track(ptrack: ParamTrack, cfg: AnwConfig, M: int = 0, grid_size: int = 1001) -> FittedTrack:
    """DS-ANW of each coordinate against s with shared (h, lambda, M) on a uniform s-grid."""
    grid = uniform_grid(0.0, 1.0, grid_size)
    x_curve = dsanw_fit(ptrack.coordinate(0), cfg, M, grid)
    y_curve = dsanw_fit(ptrack.coordinate(1), cfg, M, grid)
    return FittedTrack(grid, x_curve.values, y_curve.values, {**cfg.describe(), "M": M}, M)


def track_waypoint_gaps(ptrack: ParamTrack, cfg: AnwConfig, M: int = 0) -> NDArray[np.float64]:
    """Euclidean distance between the fitted curve at each constrained s and its waypoint."""
    constrained = list(ptrack.constraint_set)
    at = ptrack.s[constrained]
    fitted_x = dsanw_fit(ptrack.coordinate(0), cfg, M, at).values
    fitted_y = dsanw_fit(ptrack.coordinate(1), cfg, M, at).values
    return np.hypot(fitted_x - ptrack.xs[constrained], fitted_y - ptrack.ys[constrained])


def route_dataset(track: Track2D, theta: float = 0.0) -> tuple[Dataset, FlaggedTrack]:
    """Augmented track in the rotated frame as a 1-D dataset (X = x', Y = y')."""
    flagged = augment_waypoints(track)
    rotated = rotate(flagged.points, theta)
    return Dataset(rotated[:, 0], rotated[:, 1], flagged.constraint_set), flagged


def fit_route(track: Track2D, cfg: AnwConfig, M: int = 0, theta: float = 0.0, grid_size: int = 1001) -> FittedRoute:
    """Railway workflow with theta = 0 (X = lon, Y = lat); highway workflow with theta = pi/2."""
    data, _ = route_dataset(track, theta)
    grid = uniform_grid(float(data.xs.min()), float(data.xs.max()), grid_size)
    curve = dsanw_fit(data, cfg, M, grid)
    constrained = list(data.constraint_set)
    at = data.xs[constrained]
    fitted_at = dsanw_fit(data, cfg, M, at).values if constrained else np.empty(0)
    gaps = np.abs(fitted_at - data.ys[constrained])
    logger.info(
        "Fitted route with %d waypoints, theta=%.4g, max gap %.3g", len(constrained), theta, gaps.max(initial=0.0)
    )
    return FittedRoute(
        theta=theta,
        points=unrotate(np.column_stack([grid, curve.values]), theta),
        waypoint_fits=unrotate(np.column_stack([at, fitted_at]), theta),
        waypoint_targets=unrotate(np.column_stack([at, data.ys[constrained]]), theta),
        gaps=gaps,
        dataset=data,
        config={**cfg.describe(), "M": M, "theta": theta},
    )
