import asyncio
import math

import numpy as np
from quart import Blueprint, current_app, request

from . import __version__
from .config import Settings
from .errors import AnwError, InvalidConfigError
from .experiment import FitSettings, fit_dataset, parse_methods
from .kernels import Dataset, KernelFamily
from .metrics import CssConfig, report, rmse, smoothness, waypoint_error
from .tuning import DEFAULT_LAMBDA_GRID, tune

bp = Blueprint("api", __name__)


@bp.before_app_serving
async def configure_defaults():
    bp.settings = Settings.from_env()
    current_app.logger.info(
        "Serving anwfit %s (kernel=%s, grid_size=%d, folds=%d)",
        __version__,
        bp.settings.kernel,
        bp.settings.grid_size,
        bp.settings.folds,
    )


@bp.errorhandler(AnwError)
async def handle_anw_error(error: AnwError):
    current_app.logger.warning("%s: %s", type(error).__name__, error)
    return {"error": type(error).__name__, "detail": str(error)}, 422


async def _payload() -> dict:
    data = await request.get_json(silent=True)
    if not isinstance(data, dict):
        raise InvalidConfigError("request body must be a JSON object")
    return data


def _dataset(data: dict) -> Dataset:
    try:
        xs = np.asarray(data["x"], dtype=float)
        ys = np.asarray(data["y"], dtype=float)
    except KeyError as exc:
        raise InvalidConfigError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InvalidConfigError(f"x and y must be numeric arrays: {exc}") from None
    return Dataset(xs, ys, tuple(data.get("constraints", ())))


def _number(data: dict, key: str, default, kind=float):
    value = data.get(key, default)
    if value is None and default is None:
        return None
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise InvalidConfigError(f"{key} must be a number, got {value!r}") from None


def _finite_or_none(record: dict) -> dict:
    return {
        key: value if not isinstance(value, float) or math.isfinite(value) else None for key, value in record.items()
    }


@bp.get("/")
async def index():
    return {
        "service": "anwfit",
        "version": __version__,
        "endpoints": ["POST /fit", "POST /tune", "POST /metrics"],
        "methods": ["NW", "Naive", "ANW", "DSANW(M)"],
        "kernels": [str(family) for family in KernelFamily],
    }


@bp.post("/fit")
async def fit_handler():
    data = await _payload()
    dataset = _dataset(data)
    settings = FitSettings(
        h=_number(data, "h", 0.1),
        lam=_number(data, "lambda", 1.0),
        gamma=_number(data, "gamma", 0.5),
        radius=_number(data, "radius", None),
        kernel=KernelFamily.parse(data.get("kernel", bp.settings.kernel)),
    )
    methods = parse_methods(data.get("methods", ["ANW"]))
    grid_size = _number(data, "grid_size", bp.settings.grid_size, int)
    record = await asyncio.to_thread(fit_dataset, dataset, methods, settings, grid_size, source="api")
    current_app.logger.info("Fitted %d method(s) on n=%d, q=%d", len(methods), dataset.n, dataset.q)
    return {
        "config": record.config,
        "metrics": [row.table_row() for row in record.rows],
        "curves": record.curves,
    }


@bp.post("/tune")
async def tune_handler():
    data = await _payload()
    dataset = _dataset(data)
    result = await asyncio.to_thread(
        tune,
        dataset,
        data.get("kernel", bp.settings.kernel),
        data.get("h_grid"),
        data.get("lambda_grid", DEFAULT_LAMBDA_GRID),
        _number(data, "folds", bp.settings.folds, int),
        _number(data, "seed", 0, int),
        _number(data, "penalty_weight", 1.0),
        _number(data, "sharpen_steps", 0, int),
    )
    return {
        "best_h": result.best_h,
        "best_lambda": result.best_lambda,
        "folds": result.folds,
        "seed": result.seed,
        "sharpen_steps": result.sharpen_steps,
        "surface": [_finite_or_none(cell) for cell in result.surface_records()],
    }


@bp.post("/metrics")
async def metrics_handler():
    """Score a fitted curve given on a uniform grid against reference values."""
    data = await _payload()
    try:
        fitted, grid, truth = data["fitted"], data["grid"], data["truth"]
    except KeyError as exc:
        raise InvalidConfigError(f"missing field {exc.args[0]!r}") from None
    waypoint_fits = data.get("waypoint_fits", [])
    accuracy = rmse(fitted, truth)
    gap = waypoint_error(waypoint_fits, data.get("waypoint_targets", [])) if waypoint_fits else 0.0
    roughness = smoothness(fitted, grid)
    cfg = CssConfig(
        tau_c=_number(data, "tau_c", 0.10),
        tau_g=_number(data, "tau_g", 0.05),
        tau_s=_number(data, "tau_s", None),
    )
    if cfg.tau_s is None:
        cfg = cfg.with_median_smoothness([roughness])
    return report(accuracy, gap, roughness, cfg).to_record()
