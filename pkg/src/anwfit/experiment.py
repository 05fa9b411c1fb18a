"""Experiment runner: fit several methods on one dataset and score them.

A run produces a :class:`RunRecord` holding the configuration echo, the fitted curves and
one metrics row per method (and per target for the 2-D scenario). Given the same
configuration and seed the record is identical apart from its creation timestamp.
"""

from __future__ import annotations

import enum
import logging
import re
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from ._compat import StrEnum
from . import __version__
from .constrained import AnwConfig, NaiveConfig, anw_fit, naive_fit
from .errors import InvalidConfigError
from .kernels import Dataset, FittedCurve, KernelFamily, KernelSpec, nw_fit, uniform_grid
from .metrics import (
    CssConfig,
    MetricsReport,
    cross_track_rmse,
    interior_mask,
    report,
    rmse,
    smoothness,
    waypoint_error,
)
from .sharpening import dsanw_fit
from .simulate import Scenario, SimConfig, generate, generate_track, route_response
from .trajectory import ParamTrack, Track2D, fit_track, parameterize, route_dataset, track_waypoint_gaps, unrotate
from .tuning import DEFAULT_FOLDS, tune

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ("Method", "h", "lambda", "RMSE", "WaypointError", "Smoothness", "CSS")

# fixed (h, lambda) used when a run is not tuned
DEFAULT_PARAMETERS = {
    Scenario.SHARPEN_1D: (0.030, 100.0),
    Scenario.CASE1: (0.2, 100.0),
    Scenario.CASE2: (0.2, 100.0),
    Scenario.TRACK_2D: (0.02, 100.0),
}


class MethodKind(StrEnum):
    NW = "NW"
    NAIVE = "Naive"
    ANW = "ANW"
    DSANW = "DSANW"


_METHOD_PATTERN = re.compile(r"^\s*(nw|naive|anw|ds-?anw)\s*(?:[(:]\s*(?:m\s*=\s*)?(\d+)\s*\)?)?\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class Method:
    kind: MethodKind
    M: int = 0

    @classmethod
    def parse(cls, text: str) -> Method:
        """Accepts NW, Naive, ANW, DSANW(2), dsanw:2 or DS-ANW(M=2)."""
        match = _METHOD_PATTERN.match(text)
        if not match:
            raise InvalidConfigError(f"unknown method {text!r}")
        name, steps = match.group(1).lower().replace("-", ""), match.group(2)
        kind = {"nw": MethodKind.NW, "naive": MethodKind.NAIVE, "anw": MethodKind.ANW, "dsanw": MethodKind.DSANW}[name]
        if kind is MethodKind.DSANW:
            return cls(kind, 1 if steps is None else int(steps))
        if steps is not None:
            raise InvalidConfigError(f"only DS-ANW takes a number of sharpening steps: {text!r}")
        return cls(kind)

    @property
    def label(self) -> str:
        return f"DS-ANW(M={self.M})" if self.kind is MethodKind.DSANW else str(self.kind)

    @property
    def uses_lambda(self) -> bool:
        return self.kind in (MethodKind.ANW, MethodKind.DSANW)


def parse_methods(texts: Iterable[str]) -> list[Method]:
    return [Method.parse(text) for text in texts]


@dataclass(frozen=True)
class FitSettings:
    h: float
    lam: float = 1.0
    gamma: float = 0.5
    radius: float | None = None
    kernel: KernelFamily = KernelFamily.GAUSSIAN


def fit_method(data: Dataset, method: Method, settings: FitSettings, grid: ArrayLike) -> FittedCurve:
    spec = KernelSpec(settings.kernel, settings.h)
    match method.kind:
        case MethodKind.NW:
            return nw_fit(data, spec, grid)
        case MethodKind.NAIVE:
            return naive_fit(data, NaiveConfig(spec, settings.gamma, settings.radius), grid)
        case MethodKind.ANW:
            return anw_fit(data, AnwConfig(spec, settings.lam), grid)
        case MethodKind.DSANW:
            return dsanw_fit(data, AnwConfig(spec, settings.lam), method.M, grid)


@dataclass(frozen=True)
class MetricsRow:
    method: str
    h: float
    lam: float | None
    metrics: MetricsReport

    def table_row(self) -> dict[str, Any]:
        return dict(
            zip(
                METRICS_COLUMNS,
                (
                    self.method,
                    self.h,
                    self.lam,
                    self.metrics.rmse,
                    self.metrics.waypoint_error,
                    self.metrics.smoothness,
                    self.metrics.css,
                ),
            )
        )

    def as_dict(self) -> dict[str, Any]:
        return {"method": self.method, "h": self.h, "lambda": self.lam, "metrics": self.metrics.to_record()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> MetricsRow:
        return cls(data["method"], data["h"], data["lambda"], MetricsReport.from_record(data["metrics"]))


@dataclass
class RunRecord:
    config: dict[str, Any]
    seed: int
    rows: list[MetricsRow] = field(default_factory=list)
    curves: dict[str, dict[str, list[float]]] = field(default_factory=dict)
    tuning: list[dict[str, Any]] = field(default_factory=list)
    version: str = __version__
    created_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(), compare=False)

    def row(self, method: str) -> MetricsRow:
        return next(row for row in self.rows if row.method == method)

    def as_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "created_at": self.created_at,
            "seed": self.seed,
            "config": self.config,
            "metrics": [row.as_dict() for row in self.rows],
            "curves": self.curves,
            "tuning": self.tuning,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunRecord:
        return cls(
            config=data["config"],
            seed=data["seed"],
            rows=[MetricsRow.from_dict(row) for row in data["metrics"]],
            curves=data["curves"],
            tuning=data.get("tuning", []),
            version=data["version"],
            created_at=data["created_at"],
        )


class _ParameterResolver:
    """(h, lambda) per method, either fixed, tuned once and shared, or tuned per variant."""

    def __init__(self, fixed: FitSettings, tuning: str | None, folds: int, seed: int):
        if tuning not in (None, "shared", "per_variant"):
            raise InvalidConfigError(f"unknown tuning mode {tuning!r}")
        self.fixed = fixed
        self.tuning = tuning
        self.folds = folds
        self.seed = seed
        self.surfaces: list[dict[str, Any]] = []
        self._cache: dict[tuple[str, int, int], tuple[float, float]] = {}

    def _tuned(self, data: Dataset, target: str, lambda_grid, steps: int) -> tuple[float, float]:
        key = (target, 0 if lambda_grid is None else 1, steps)
        if key not in self._cache:
            result = tune(
                data, self.fixed.kernel, lambda_grid=lambda_grid, folds=self.folds, seed=self.seed, sharpen_steps=steps
            )
            self._cache[key] = (result.best_h, result.best_lambda)
            self.surfaces.append(
                {
                    "target": target,
                    "lambda_fixed": lambda_grid is not None,
                    "sharpen_steps": steps,
                    "best_h": result.best_h,
                    "best_lambda": result.best_lambda,
                    "surface": result.surface_records(),
                }
            )
        return self._cache[key]

    def settings(self, data: Dataset, method: Method, target: str) -> FitSettings:
        if self.tuning is None:
            return self.fixed
        if self.tuning == "shared":
            h, lam = self._tuned(data, target, None, 0)
        elif method.uses_lambda:
            h, lam = self._tuned(data, target, None, method.M)
        else:
            h, lam = self._tuned(data, target, [1.0], 0)
        return replace(self.fixed, h=h, lam=lam)


def _score(rows: list[tuple[str, FitSettings, Method, float, float, float]], css_config: CssConfig) -> list[MetricsRow]:
    """Resolve tau_s as the median smoothness of the candidates, then build the reports."""
    if not rows:
        return []
    cfg = css_config if css_config.tau_s is not None else css_config.with_median_smoothness(r[5] for r in rows)
    return [
        MetricsRow(label, settings.h, settings.lam if method.uses_lambda else None, report(rm, we, sm, cfg))
        for label, settings, method, rm, we, sm in rows
    ]


def _waypoint_error(data: Dataset, method: Method, settings: FitSettings) -> float:
    if not data.q:
        return 0.0
    constrained = list(data.constraint_set)
    fitted = fit_method(data, method, settings, data.xs[constrained]).values
    return waypoint_error(fitted, data.ys[constrained])


def _curve_columns(name: str, grid, values, truth=None) -> dict[str, list[float]]:
    columns = {name: np.asarray(grid).tolist(), "value": np.asarray(values).tolist()}
    if truth is not None:
        columns["truth"] = np.asarray(truth).tolist()
    return columns


def run_experiment(
    sim: SimConfig,
    methods: Sequence[Method | str],
    tuning: str | bool | None = None,
    h: float | None = None,
    lam: float | None = None,
    gamma: float = 0.5,
    kernel: KernelFamily | str = KernelFamily.GAUSSIAN,
    grid_size: int = 1001,
    folds: int = DEFAULT_FOLDS,
    css_config: CssConfig | None = None,
    interior_margin: float = 0.0,
) -> RunRecord:
    """Fit every method on one simulated dataset and compute its metrics.

    ``tuning`` is None/False (fixed h and lambda), ``"shared"`` (tune ANW once and reuse),
    ``"per_variant"`` (tune each method separately) or True (the scenario default: per
    variant for the 2-D track, shared otherwise).
    """
    methods = [m if isinstance(m, Method) else Method.parse(m) for m in methods]
    if tuning is True:
        tuning = "per_variant" if sim.scenario is Scenario.TRACK_2D else "shared"
    default_h, default_lam = DEFAULT_PARAMETERS[sim.scenario]
    fixed = FitSettings(
        h=default_h if h is None else h,
        lam=default_lam if lam is None else lam,
        gamma=gamma,
        kernel=KernelFamily.parse(kernel),
    )
    resolver = _ParameterResolver(fixed, tuning or None, folds, sim.seed)
    css_config = css_config or CssConfig()
    record = RunRecord(
        config={
            "simulation": sim.as_dict(),
            "methods": [m.label for m in methods],
            "tuning": tuning or None,
            "h": fixed.h,
            "lambda": fixed.lam,
            "gamma": gamma,
            "kernel": str(fixed.kernel),
            "grid_size": grid_size,
            "folds": folds,
            "interior_margin": interior_margin,
        },
        seed=sim.seed,
    )
    if sim.scenario is Scenario.TRACK_2D:
        _run_track(sim, methods, resolver, grid_size, css_config, record)
    else:
        _run_curve(sim, methods, resolver, grid_size, css_config, interior_margin, record)
    record.tuning = resolver.surfaces
    return record


def _run_curve(sim, methods, resolver, grid_size, css_config, interior_margin, record):
    data = generate(sim)
    lo, hi = sim.preset.domain
    grid = uniform_grid(lo, hi, grid_size)
    truth = sim.truth(grid)
    inside = interior_mask(grid, interior_margin)
    scored = []
    for method in methods:
        settings = resolver.settings(data, method, "y")
        curve = fit_method(data, method, settings, grid)
        scored.append(
            (
                method.label,
                settings,
                method,
                rmse(curve.values[inside], truth[inside]),
                _waypoint_error(data, method, settings),
                smoothness(curve.values[inside], grid[inside]),
            )
        )
        record.curves[method.label] = _curve_columns("x", grid, curve.values, truth)
        logger.info("%s: h=%g lambda=%g", method.label, settings.h, settings.lam)
    record.rows.extend(_score(scored, css_config))


def _fit_track(ptrack: ParamTrack, method: Method, settings: FitSettings, grid_size: int):
    """Fitted x(s), y(s) on the s-grid plus the Euclidean gap at each constrained point."""
    if method.uses_lambda:
        cfg = AnwConfig(KernelSpec(settings.kernel, settings.h), settings.lam)
        fitted = fit_track(ptrack, cfg, method.M, grid_size)
        gaps = track_waypoint_gaps(ptrack, cfg, method.M) if ptrack.constraint_set else np.empty(0)
        return fitted.xs, fitted.ys, gaps
    grid = uniform_grid(0.0, 1.0, grid_size)
    x_data, y_data = ptrack.coordinate(0), ptrack.coordinate(1)
    fitted_x = fit_method(x_data, method, settings, grid).values
    fitted_y = fit_method(y_data, method, settings, grid).values
    if not ptrack.constraint_set:
        return fitted_x, fitted_y, np.empty(0)
    constrained = list(ptrack.constraint_set)
    at = ptrack.s[constrained]
    gap_x = fit_method(x_data, method, settings, at).values - ptrack.xs[constrained]
    gap_y = fit_method(y_data, method, settings, at).values - ptrack.ys[constrained]
    return fitted_x, fitted_y, np.hypot(gap_x, gap_y)


def _run_track(sim, methods, resolver, grid_size, css_config, record):
    synthetic = generate_track(sim)
    ptrack = parameterize(synthetic.track)
    z_data = route_response(sim)
    grid = uniform_grid(0.0, 1.0, grid_size)
    z_truth = sim.truth(grid)
    y_data = ptrack.coordinate(1)
    track_rows, z_rows = [], []
    for method in methods:
        # y(s) carries the track's shape; x(s) is nearly linear in s
        settings = resolver.settings(y_data, method, "track")
        fitted_x, fitted_y, gaps = _fit_track(ptrack, method, settings, grid_size)
        track_rows.append(
            (
                f"{method.label} [track]",
                settings,
                method,
                cross_track_rmse(np.column_stack([fitted_x, fitted_y]), synthetic.reference),
                waypoint_error(gaps, np.zeros(len(gaps))) if len(gaps) else 0.0,
                smoothness(fitted_x, grid) + smoothness(fitted_y, grid),
            )
        )
        record.curves[f"{method.label} [track]"] = {"s": grid.tolist(), "x": fitted_x.tolist(), "y": fitted_y.tolist()}

        z_settings = resolver.settings(z_data, method, "z")
        z_curve = fit_method(z_data, method, z_settings, grid)
        z_rows.append(
            (
                f"{method.label} [z]",
                z_settings,
                method,
                rmse(z_curve, z_truth),
                _waypoint_error(z_data, method, z_settings),
                smoothness(z_curve),
            )
        )
        record.curves[f"{method.label} [z]"] = _curve_columns("s", grid, z_curve.values, z_truth)
    record.rows.extend(_score(track_rows, css_config))
    record.rows.extend(_score(z_rows, css_config))


def fit_dataset(
    data: Dataset,
    methods: Sequence[Method | str],
    settings: FitSettings,
    grid_size: int = 1001,
    truth: ArrayLike | None = None,
    css_config: CssConfig | None = None,
    source: str | None = None,
) -> RunRecord:
    """Fit file data. Without ``truth`` (values on the grid) RMSE is measured against the
    observed stochastic responses at their design points."""
    methods = [m if isinstance(m, Method) else Method.parse(m) for m in methods]
    grid = uniform_grid(float(data.xs.min()), float(data.xs.max()), grid_size)
    stochastic = data.stochastic_indices
    record = RunRecord(
        config={
            "source": source,
            "methods": [m.label for m in methods],
            "grid_size": grid_size,
            **_settings_dict(settings),
        },
        seed=0,
    )
    scored = []
    for method in methods:
        curve = fit_method(data, method, settings, grid)
        if truth is None:
            accuracy = rmse(fit_method(data, method, settings, data.xs[stochastic]), data.ys[stochastic])
        else:
            accuracy = rmse(curve, truth)
        gap = _waypoint_error(data, method, settings)
        scored.append((method.label, settings, method, accuracy, gap, smoothness(curve)))
        record.curves[method.label] = _curve_columns("x", grid, curve.values, truth)
    record.rows.extend(_score(scored, css_config or CssConfig()))
    return record


def fit_route_record(
    track: Track2D,
    methods: Sequence[Method | str],
    settings: FitSettings,
    theta: float = 0.0,
    grid_size: int = 1001,
    css_config: CssConfig | None = None,
    source: str | None = None,
) -> RunRecord:
    """Route workflow for every method: augment, rotate, fit y' on x', unrotate.

    Metrics are computed in the rotated frame (rotation preserves distances); RMSE is
    measured against the observed stops.
    """
    methods = [m if isinstance(m, Method) else Method.parse(m) for m in methods]
    data, _ = route_dataset(track, theta)
    grid = uniform_grid(float(data.xs.min()), float(data.xs.max()), grid_size)
    stochastic = data.stochastic_indices
    record = RunRecord(
        config={
            "source": source,
            "methods": [m.label for m in methods],
            "grid_size": grid_size,
            "theta": theta,
            **_settings_dict(settings),
        },
        seed=0,
    )
    scored = []
    for method in methods:
        curve = fit_method(data, method, settings, grid)
        accuracy = rmse(fit_method(data, method, settings, data.xs[stochastic]), data.ys[stochastic])
        gap = _waypoint_error(data, method, settings)
        scored.append((method.label, settings, method, accuracy, gap, smoothness(curve)))
        points = unrotate(np.column_stack([grid, curve.values]), theta)
        record.curves[method.label] = {"x": points[:, 0].tolist(), "y": points[:, 1].tolist()}
    record.rows.extend(_score(scored, css_config or CssConfig()))
    return record


def _settings_dict(settings: FitSettings) -> dict[str, Any]:
    return {
        "h": settings.h,
        "lambda": settings.lam,
        "gamma": settings.gamma,
        "radius": settings.radius,
        "kernel": str(settings.kernel),
    }


@dataclass(frozen=True)
class SeedAverage:
    method: str
    rmse: float
    waypoint_error: float
    smoothness: float
    css: float
    replicates: int


def replicate(
    sim: SimConfig, methods: Sequence[Method | str], replicates: int, max_workers: int | None = None, **kwargs
) -> dict[str, SeedAverage]:
    """Seed-averaged metrics per method over independent replicate substreams."""
    if replicates < 1:
        raise InvalidConfigError(f"need at least one replicate, got {replicates}")
    configs = [replace(sim, replicate=i) for i in range(replicates)]

    def run(config: SimConfig) -> RunRecord:
        return run_experiment(config, methods, **kwargs)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            records = list(pool.map(run, configs))
    else:
        records = [run(config) for config in configs]

    averages = {}
    for label in (row.method for row in records[0].rows):
        reports = [record.row(label).metrics for record in records]
        averages[label] = SeedAverage(
            label,
            float(np.mean([r.rmse for r in reports])),
            float(np.mean([r.waypoint_error for r in reports])),
            float(np.mean([r.smoothness for r in reports])),
            float(np.mean([r.css for r in reports])),
            len(reports),
        )
    return averages

