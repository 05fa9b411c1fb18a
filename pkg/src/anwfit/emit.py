"""Run artefacts: ``metrics.csv``, ``curve_<method>.csv`` and ``run.json``."""

from __future__ import annotations

import enum
import json
import logging
import re
from pathlib import Path

import pandas as pd

from ._compat import StrEnum
from . import __version__
from .errors import EmitError
from .experiment import METRICS_COLUMNS, RunRecord
from .tuning import TuningResult

logger = logging.getLogger(__name__)


class OutputFormat(StrEnum):
    CSV = "csv"
    JSON = "json"


def curve_filename(label: str) -> str:
    slug = re.sub(r"[^0-9a-z]+", "_", label.lower()).strip("_")
    return f"curve_{slug}.csv"


def metrics_frame(record: RunRecord) -> pd.DataFrame:
    return pd.DataFrame([row.table_row() for row in record.rows], columns=list(METRICS_COLUMNS))


def emit(record: RunRecord, out_dir: str | Path, formats=(OutputFormat.CSV, OutputFormat.JSON)) -> list[Path]:
    """Write the record; CSV gives the metrics table and one file per curve, JSON mirrors both plus config.

    Without JSON the configuration echo goes to ``config.json``.
    """
    out_dir = Path(out_dir)
    formats = {OutputFormat(str(f).lower()) for f in formats}
    written: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if OutputFormat.CSV in formats:
            path = out_dir / "metrics.csv"
            metrics_frame(record).to_csv(path, index=False, lineterminator="\n")
            written.append(path)
            for label, columns in record.curves.items():
                path = out_dir / curve_filename(label)
                pd.DataFrame(columns).to_csv(path, index=False, lineterminator="\n")
                written.append(path)
        if OutputFormat.JSON in formats:
            path = out_dir / "run.json"
            path.write_text(json.dumps(record.as_dict(), indent=2), encoding="utf-8")
            written.append(path)
        else:
            # CSV-only runs still record how to reproduce them
            path = out_dir / "config.json"
            document = {"version": record.version, "seed": record.seed, "config": record.config}
            path.write_text(json.dumps(document, indent=2), encoding="utf-8")
            written.append(path)
    except OSError as exc:
        raise EmitError(f"could not write run artefacts to {out_dir}: {exc}") from exc
    logger.info("Wrote %d artefact(s) to %s", len(written), out_dir)
    return written


def read_metrics_csv(path: str | Path) -> list[dict]:
    frame = pd.read_csv(path)
    return frame.to_dict(orient="records")


def read_run_json(path: str | Path) -> RunRecord:
    return RunRecord.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def emit_tuning(result: TuningResult, config: dict, out_dir: str | Path, formats=(OutputFormat.CSV, OutputFormat.JSON)):
    """Loss surface as ``tuning.csv`` and, with the selection and config, ``tuning.json``."""
    out_dir = Path(out_dir)
    formats = {OutputFormat(str(f).lower()) for f in formats}
    written: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if OutputFormat.CSV in formats:
            path = out_dir / "tuning.csv"
            pd.DataFrame(result.surface_records()).to_csv(path, index=False, lineterminator="\n")
            written.append(path)
        if OutputFormat.JSON in formats:
            path = out_dir / "tuning.json"
            document = {
                "version": __version__,
                "config": config,
                "best_h": result.best_h,
                "best_lambda": result.best_lambda,
                "surface": result.surface_records(),
            }
            path.write_text(json.dumps(document, indent=2), encoding="utf-8")
            written.append(path)
    except OSError as exc:
        raise EmitError(f"could not write tuning artefacts to {out_dir}: {exc}") from exc
    return written
