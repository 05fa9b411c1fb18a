"""Command-line harness.

Every verb accepts ``--config PATH`` (``key=value`` or YAML); flags given on the command
line override file values. Library errors are printed as ``<ErrorClass>: <message>`` and
exit with status 1.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import click
import pandas as pd
from dotenv import load_dotenv

from .config import Settings, configure_logging, load_config_file
from .emit import emit, emit_tuning, metrics_frame, read_metrics_csv, read_run_json
from .errors import AnwError, InvalidConfigError
from .experiment import FitSettings, Method, fit_dataset, fit_route_record, parse_methods, run_experiment
from .ingest import Schema, ingest_csv, write_dataset, write_track
from .kernels import Dataset, KernelFamily
from .simulate import Scenario, SimConfig, WaypointMode
from .trajectory import augment_waypoints, route_dataset
from .tuning import DEFAULT_LAMBDA_GRID, tune

logger = logging.getLogger(__name__)

DEFAULT_METHODS = {
    Scenario.SHARPEN_1D: "ANW,DSANW(1),DSANW(2),DSANW(3)",
    Scenario.CASE1: "NW,Naive,ANW",
    Scenario.CASE2: "NW,Naive,ANW",
    Scenario.TRACK_2D: "ANW,DSANW(1),DSANW(2)",
}


class AnwGroup(click.Group):
    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except AnwError as exc:
            click.echo(f"{type(exc).__name__}: {exc}", err=True)
            ctx.exit(1)


def _load_config(ctx: click.Context, param, value):
    if value is not None:
        ctx.default_map = {**(ctx.default_map or {}), **load_config_file(value)}
    return value


def _choices(enum_type) -> click.Choice:
    return click.Choice([member.value for member in enum_type], case_sensitive=False)


def _split(text: str | None) -> list[str]:
    return [part.strip() for part in (text or "").split(",") if part.strip()]


def _floats(text: str | None, name: str) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(part) for part in _split(text)]
    except ValueError:
        raise InvalidConfigError(f"{name} must be a comma-separated list of numbers, got {text!r}") from None


def _methods(text: str | None, steps: int | None, fallback: str) -> list[Method]:
    if text is None and steps is not None:
        text = "ANW" if steps == 0 else f"DSANW({steps})"
    return parse_methods(_split(text or fallback))


def _formats(text: str) -> list[str]:
    formats = [part.lower() for part in _split(text)]
    unknown = sorted(set(formats) - {"csv", "json"})
    if unknown or not formats:
        raise InvalidConfigError(f"--format takes csv and/or json, got {text!r}")
    return formats


config_option = click.option(
    "--config",
    type=click.Path(dir_okay=False),
    callback=_load_config,
    is_eager=True,
    expose_value=False,
    help="key=value or YAML file with option defaults.",
)
kernel_option = click.option("--kernel", type=_choices(KernelFamily), default=None, help="Kernel family.")
grid_option = click.option("--grid-size", type=int, default=None, help="Evaluation grid size (default 1001).")
folds_option = click.option("--folds", type=int, default=None, help="Cross-validation folds (default 5).")
seed_option = click.option("--seed", type=int, default=0, show_default=True)
format_option = click.option("--format", "formats", default="csv,json", show_default=True, help="csv, json or both.")
out_option = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
schema_option = click.option("--schema", type=_choices(Schema), default="xy", show_default=True)
steps_option = click.option("--M", "steps", type=click.IntRange(min=0), default=None, help="Sharpening steps.")
methods_option = click.option("--methods", default=None, help="Comma-separated, e.g. NW,Naive,ANW,DSANW(2).")


@click.group(cls=AnwGroup)
@click.pass_context
def cli(ctx: click.Context):
    """Constrained Nadaraya-Watson fitting with fixed waypoints."""
    load_dotenv(override=True)
    ctx.obj = Settings.from_env()
    configure_logging(ctx.obj)


def _finish(record, settings: Settings, out: str | None, formats: str):
    out_dir = Path(out) if out else settings.output_dir
    written = emit(record, out_dir, _formats(formats))
    click.echo(metrics_frame(record).to_string(index=False))
    click.echo(f"Wrote {len(written)} file(s) to {out_dir}")


@cli.command()
@click.argument("scenario", type=_choices(Scenario))
@config_option
@click.option("--n", type=int, default=None, help="Sample size (scenario preset otherwise).")
@click.option("--sigma", type=float, default=None, help="Noise standard deviation.")
@click.option("--q", type=int, default=None, help="Number of waypoints.")
@click.option("--waypoint-mode", type=_choices(WaypointMode), default=None)
@click.option("--replicate", type=int, default=0, show_default=True, help="Replicate substream index.")
@methods_option
@steps_option
@kernel_option
@click.option("--h", type=float, default=None, help="Bandwidth (scenario default otherwise).")
@click.option("--lambda", "lam", type=float, default=None, help="Waypoint multiplier.")
@click.option("--gamma", type=float, default=0.5, show_default=True, help="Naive shrink factor.")
@click.option(
    "--tuning",
    type=click.Choice(["none", "shared", "per_variant", "auto"]),
    default="none",
    show_default=True,
    help="Cross-validate (h, lambda) instead of using fixed values.",
)
@click.option("--interior-margin", type=float, default=0.0, show_default=True)
@grid_option
@folds_option
@seed_option
@format_option
@out_option
@click.pass_obj
def simulate(
    settings: Settings,
    scenario,
    n,
    sigma,
    q,
    waypoint_mode,
    replicate,
    methods,
    steps,
    kernel,
    h,
    lam,
    gamma,
    tuning,
    interior_margin,
    grid_size,
    folds,
    seed,
    formats,
    out,
):
    """Generate a synthetic dataset, fit the methods and score them."""
    sim = SimConfig(scenario, n=n, sigma=sigma, seed=seed, q=q, waypoint_mode=waypoint_mode, replicate=replicate)
    record = run_experiment(
        sim,
        _methods(methods, steps, DEFAULT_METHODS[sim.scenario]),
        tuning={"none": None, "auto": True}.get(tuning, tuning),
        h=h,
        lam=lam,
        gamma=gamma,
        kernel=kernel or settings.kernel,
        grid_size=grid_size or settings.grid_size,
        folds=folds or settings.folds,
        interior_margin=interior_margin,
    )
    _finish(record, settings, out, formats)


def _resolve_parameters(data: Dataset, kernel, h, lam, folds, seed) -> tuple[float, float]:
    """Fixed (h, lambda) where given; whichever is missing is cross-validated."""
    if h is not None and lam is not None:
        return h, lam
    if h is not None and not data.q:
        # lambda has no effect without waypoints
        return h, 1.0
    result = tune(
        data,
        kernel,
        h_grid=None if h is None else [h],
        lambda_grid=DEFAULT_LAMBDA_GRID if lam is None else [lam],
        folds=folds,
        seed=seed,
    )
    logger.info("Tuned h=%g lambda=%g", result.best_h, result.best_lambda)
    return result.best_h, result.best_lambda


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@config_option
@schema_option
@methods_option
@steps_option
@kernel_option
@click.option("--h", type=float, default=None, help="Bandwidth (cross-validated when omitted).")
@click.option("--lambda", "lam", type=float, default=None, help="Waypoint multiplier (cross-validated when omitted).")
@click.option("--gamma", type=float, default=0.5, show_default=True, help="Naive shrink factor.")
@click.option("--theta", type=float, default=0.0, show_default=True, help="Route rotation in degrees (lonlat).")
@grid_option
@folds_option
@seed_option
@format_option
@out_option
@click.pass_obj
def fit(
    settings: Settings, path, schema, methods, steps, kernel, h, lam, gamma, theta, grid_size, folds, seed, formats, out
):
    """Fit a CSV file. lonlat files run the augment/rotate/fit/unrotate route workflow."""
    kernel = KernelFamily.parse(kernel or settings.kernel)
    grid_size = grid_size or settings.grid_size
    folds = folds or settings.folds
    methods = _methods(methods, steps, "NW,ANW")
    loaded = ingest_csv(path, schema)
    if isinstance(loaded, Dataset):
        h, lam = _resolve_parameters(loaded, kernel, h, lam, folds, seed)
        record = fit_dataset(loaded, methods, FitSettings(h, lam, gamma, kernel=kernel), grid_size, source=str(path))
    else:
        radians = math.radians(theta)
        h, lam = _resolve_parameters(route_dataset(loaded, radians)[0], kernel, h, lam, folds, seed)
        settings_used = FitSettings(h, lam, gamma, kernel=kernel)
        record = fit_route_record(loaded, methods, settings_used, radians, grid_size, source=str(path))
    _finish(record, settings, out, formats)


@cli.command(name="tune")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@config_option
@schema_option
@kernel_option
@click.option("--h-grid", default=None, help="Comma-separated bandwidths (log-spaced default).")
@click.option("--lambda-grid", default=None, help="Comma-separated multipliers (default 1,10,100,1000).")
@click.option("--penalty-weight", type=float, default=1.0, show_default=True)
@click.option("--theta", type=float, default=0.0, show_default=True, help="Route rotation in degrees (lonlat).")
@click.option("--workers", type=int, default=None, help="Evaluate grid cells in a thread pool.")
@steps_option
@folds_option
@seed_option
@format_option
@out_option
@click.pass_obj
def tune_command(
    settings: Settings,
    path,
    schema,
    kernel,
    h_grid,
    lambda_grid,
    penalty_weight,
    theta,
    workers,
    steps,
    folds,
    seed,
    formats,
    out,
):
    """Cross-validate (h, lambda) for a CSV file and write the loss surface."""
    loaded = ingest_csv(path, schema)
    data = loaded if isinstance(loaded, Dataset) else route_dataset(loaded, math.radians(theta))[0]
    config = {
        "source": str(path),
        "schema": str(schema),
        "kernel": str(kernel or settings.kernel),
        "h_grid": _floats(h_grid, "--h-grid"),
        "lambda_grid": _floats(lambda_grid, "--lambda-grid") or list(DEFAULT_LAMBDA_GRID),
        "penalty_weight": penalty_weight,
        "sharpen_steps": steps or 0,
        "folds": folds or settings.folds,
        "seed": seed,
        "theta": theta,
    }
    result = tune(
        data,
        config["kernel"],
        config["h_grid"],
        config["lambda_grid"],
        config["folds"],
        seed,
        penalty_weight,
        config["sharpen_steps"],
        workers,
    )
    out_dir = Path(out) if out else settings.output_dir
    written = emit_tuning(result, config, out_dir, _formats(formats))
    click.echo(f"best h={result.best_h:.6g} lambda={result.best_lambda:.6g} (loss {result.best.total:.6g})")
    click.echo(f"Wrote {len(written)} file(s) to {out_dir}")


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@config_option
@click.option("--format", "output_format", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def metrics(path, output_format):
    """Print the metrics table of a run.json or metrics.csv."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        rows = metrics_frame(read_run_json(path)).to_dict(orient="records")
    else:
        rows = read_metrics_csv(path)
    if output_format == "json":
        click.echo(json.dumps(rows, indent=2))
    else:
        click.echo(pd.DataFrame(rows).to_csv(index=False, lineterminator="\n"), nl=False)


@cli.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@config_option
@schema_option
@click.option("--out", "out_file", type=click.Path(dir_okay=False), default=None, help="Write the normalised data.")
def ingest(path, schema, out_file):
    """Validate a CSV file; lonlat tracks are augmented with their flagged waypoints."""
    loaded = ingest_csv(path, schema)
    if isinstance(loaded, Dataset):
        summary = {"schema": "xy", "n": loaded.n, "q": loaded.q, "constraint_set": list(loaded.constraint_set)}
        if out_file:
            write_dataset(loaded, out_file)
    else:
        flagged = augment_waypoints(loaded)
        summary = {
            "schema": "lonlat",
            "n": len(flagged.points),
            "q": len(flagged.constraint_set),
            "constraint_set": list(flagged.constraint_set),
        }
        if out_file:
            write_track(flagged.points, flagged.constraint_set, out_file)
    click.echo(json.dumps(summary))
