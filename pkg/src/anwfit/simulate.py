"""Synthetic datasets for the sharpening, 1-D waypoint and 2-D track experiments.

Waypoint selection for Case 1/Case 2 is a reconstruction: a baseline NW fit with a
cross-validated bandwidth is computed, observations are ranked by absolute residual and q
waypoints are drawn from the smallest (Case 1) or largest (Case 2) decile. Waypoint
responses are set to the true curve, shifted by 2 sigma in the residual's direction for
Case 2 so that they conflict with the data.
"""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Callable
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray

from ._compat import StrEnum
from .errors import BadPresetError
from .kernels import Dataset, KernelSpec, nw_fit
from .trajectory import Track2D, parameterize
from .tuning import tune

logger = logging.getLogger(__name__)


class Scenario(StrEnum):
    SHARPEN_1D = "sharpen1d"
    CASE1 = "case1"
    CASE2 = "case2"
    TRACK_2D = "track2d"


class WaypointMode(StrEnum):
    RANDOM = "random"
    SMALL_RESIDUAL = "small"
    LARGE_RESIDUAL = "large"


def sharpening_signal(x):
    return np.sin(2 * np.pi * x) + 0.3 * np.cos(6 * np.pi * x)


def waypoint_signal(x):
    return np.sin(x) + 0.3 * np.cos(2 * x)


def track_path(t) -> NDArray[np.float64]:
    t = np.asarray(t, dtype=float)
    return np.column_stack([10.0 * t, 2.0 * np.sin(2 * np.pi * t) + 0.5 * np.sin(6 * np.pi * t)])


@dataclass(frozen=True)
class Preset:
    domain: tuple[float, float]
    truth: Callable
    n: int
    sigma: float
    q: int
    mode: WaypointMode


PRESETS = {
    Scenario.SHARPEN_1D: Preset((0.0, 1.0), sharpening_signal, 500, 0.15, 2, WaypointMode.RANDOM),
    Scenario.CASE1: Preset((0.0, 10.0), waypoint_signal, 500, 0.15, 2, WaypointMode.SMALL_RESIDUAL),
    Scenario.CASE2: Preset((0.0, 10.0), waypoint_signal, 500, 0.15, 2, WaypointMode.LARGE_RESIDUAL),
    # domain and truth describe the route response z(s)
    Scenario.TRACK_2D: Preset((0.0, 1.0), sharpening_signal, 300, 0.1, 3, WaypointMode.SMALL_RESIDUAL),
}


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; unset fields take the scenario preset."""

    scenario: Scenario
    n: int | None = None
    sigma: float | None = None
    seed: int = 0
    q: int | None = None
    waypoint_mode: WaypointMode | None = None
    replicate: int = 0

    def __post_init__(self):
        try:
            scenario = Scenario(str(self.scenario).lower())
            mode = None if self.waypoint_mode is None else WaypointMode(str(self.waypoint_mode).lower())
        except ValueError as exc:
            raise BadPresetError(str(exc)) from None
        preset = PRESETS[scenario]
        object.__setattr__(self, "scenario", scenario)
        object.__setattr__(self, "n", preset.n if self.n is None else int(self.n))
        object.__setattr__(self, "sigma", preset.sigma if self.sigma is None else float(self.sigma))
        object.__setattr__(self, "q", preset.q if self.q is None else int(self.q))
        object.__setattr__(self, "waypoint_mode", preset.mode if mode is None else mode)
        if self.q < 0 or self.n < self.q + 2:
            raise BadPresetError(f"need n >= q + 2 (n={self.n}, q={self.q})")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise BadPresetError(f"noise sd must be finite and >= 0, got {self.sigma}")

    @property
    def preset(self) -> Preset:
        return PRESETS[self.scenario]

    def truth(self, x):
        return self.preset.truth(np.asarray(x, dtype=float))

    def as_dict(self) -> dict:
        return {key: str(value) if isinstance(value, enum.Enum) else value for key, value in asdict(self).items()}


def substreams(sim: SimConfig, count: int = 3) -> list[np.random.Generator]:
    """Independent generators keyed by (seed, scenario, replicate)."""
    scenario_key = list(Scenario).index(sim.scenario)
    root = np.random.SeedSequence(sim.seed, spawn_key=(scenario_key, sim.replicate))
    return [np.random.default_rng(child) for child in root.spawn(count)]


def _pick_separated(candidates: NDArray[np.intp], xs: NDArray[np.float64], q: int, separation: float):
    chosen: list[int] = []
    for index in candidates:
        if all(abs(xs[index] - xs[other]) >= separation for other in chosen):
            chosen.append(int(index))
            if len(chosen) == q:
                break
    if len(chosen) < q:
        raise BadPresetError(f"could not place {q} separated waypoints")
    return np.array(chosen)


def _choose_waypoints(sim: SimConfig, xs, ys, rng: np.random.Generator):
    """Constraint indices and the per-waypoint offsets from the true curve."""
    lo, hi = sim.preset.domain
    separation = (hi - lo) / (4 * max(sim.q, 1))
    if sim.q == 0:
        return np.empty(0, dtype=int), np.empty(0)
    if sim.waypoint_mode is WaypointMode.RANDOM:
        chosen = _pick_separated(rng.permutation(sim.n), xs, sim.q, separation)
        return chosen, np.zeros(sim.q)

    baseline = tune(Dataset(xs, ys), lambda_grid=[1.0], seed=sim.seed)
    residual = ys - nw_fit(Dataset(xs, ys), KernelSpec(h=baseline.best_h), xs).values
    order = np.argsort(np.abs(residual), kind="stable")
    if sim.waypoint_mode is WaypointMode.LARGE_RESIDUAL:
        order = order[::-1]
    decile = max(sim.n // 10, sim.q)
    candidates = np.concatenate([rng.permutation(order[:decile]), order[decile:]])
    chosen = _pick_separated(candidates, xs, sim.q, separation)
    if sim.waypoint_mode is WaypointMode.SMALL_RESIDUAL:
        return chosen, np.zeros(sim.q)
    direction = np.where(residual[chosen] < 0, -1.0, 1.0)
    return chosen, 2.0 * sim.sigma * direction


def generate(sim: SimConfig) -> Dataset:
    """Noisy samples with q noiseless (or deliberately shifted) waypoints.

    For the 2-D scenario the dataset is the route response z(s) over the arc-length
    parameter of the generated track.
    """
    if sim.scenario is Scenario.TRACK_2D:
        return route_response(sim)
    design_rng, noise_rng, waypoint_rng = substreams(sim)
    lo, hi = sim.preset.domain
    xs = design_rng.uniform(lo, hi, sim.n)
    truth = sim.truth(xs)
    ys = truth + noise_rng.normal(0.0, sim.sigma, sim.n)
    chosen, offsets = _choose_waypoints(sim, xs, ys, waypoint_rng)
    ys[chosen] = truth[chosen] + offsets
    logger.info("Generated %s: n=%d q=%d sigma=%g seed=%d", sim.scenario, sim.n, sim.q, sim.sigma, sim.seed)
    return Dataset(xs, ys, tuple(chosen))


@dataclass(frozen=True, eq=False)
class SyntheticTrack:
    track: Track2D
    reference: NDArray[np.float64]


def generate_track(sim: SimConfig, reference_size: int = 5001) -> SyntheticTrack:
    """Noisy observations of a winding path plus q external waypoints on (or off) the path."""
    if sim.scenario is not Scenario.TRACK_2D:
        raise BadPresetError(f"{sim.scenario} is not a 2-D scenario")
    design_rng, noise_rng, _ = substreams(sim)
    t = np.sort(design_rng.uniform(0.0, 1.0, sim.n))
    points = track_path(t) + noise_rng.normal(0.0, sim.sigma, (sim.n, 2))
    t_way = np.arange(1, sim.q + 1) / (sim.q + 1)
    waypoints = track_path(t_way)
    if sim.waypoint_mode is WaypointMode.LARGE_RESIDUAL:
        tangent = track_path(t_way + 1e-6) - track_path(t_way - 1e-6)
        normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
        waypoints += 2.0 * sim.sigma * normal / np.linalg.norm(normal, axis=1, keepdims=True)
    return SyntheticTrack(Track2D(points, waypoints), track_path(np.linspace(0.0, 1.0, reference_size)))


def route_response(sim: SimConfig) -> Dataset:
    """z(s) = m(s) + noise on the parameterized synthetic track; waypoints carry m(s) exactly."""
    ptrack = parameterize(generate_track(sim).track)
    _, _, noise_rng = substreams(sim)
    z = sim.truth(ptrack.s) + noise_rng.normal(0.0, sim.sigma, ptrack.s.size)
    constrained = list(ptrack.constraint_set)
    z[constrained] = sim.truth(ptrack.s[constrained])
    return Dataset(ptrack.s, z, ptrack.constraint_set)
