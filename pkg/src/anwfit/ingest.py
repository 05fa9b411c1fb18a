"""CSV ingestion.

Two schemas, both with a header row, UTF-8 and ``.`` as decimal separator:

* ``xy``     - ``x,y,is_waypoint``     -> :class:`~anwfit.kernels.Dataset`
* ``lonlat`` - ``lon,lat,is_waypoint`` -> :class:`~anwfit.trajectory.Track2D`; flagged rows
  become external waypoints to be augmented into the track.

Error line numbers count the header as line 1.
"""

from __future__ import annotations

import enum
import math
import re
from pathlib import Path

import numpy as np
import pandas as pd

from ._compat import StrEnum
from .errors import NoRowsError, NonFiniteValueError, ParseError
from .kernels import Dataset
from .trajectory import Track2D


class Schema(StrEnum):
    XY = "xy"
    LONLAT = "lonlat"

    @property
    def columns(self) -> tuple[str, str, str]:
        return ("x", "y", "is_waypoint") if self is Schema.XY else ("lon", "lat", "is_waypoint")


def _tokenizer_line(exc: pd.errors.ParserError) -> int:
    match = re.search(r"line (\d+)", str(exc))
    return int(match.group(1)) if match else 0


def _is_blank(values) -> bool:
    return all(pd.isna(raw) or not str(raw).strip() for raw in values)


def _read_table(path: str | Path, schema: Schema) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, skip_blank_lines=False, skipinitialspace=True, encoding="utf-8"
        )
    except pd.errors.EmptyDataError:
        raise NoRowsError(f"{path}: file is empty") from None
    except pd.errors.ParserError as exc:
        raise ParseError(_tokenizer_line(exc), str(exc).strip()) from None
    frame.columns = [str(column).strip().lower() for column in frame.columns]
    missing = [column for column in schema.columns if column not in frame.columns]
    if missing:
        raise ParseError(1, f"header is missing column(s) {', '.join(missing)}")
    # blank lines are kept as rows so the index still maps to file lines
    frame = frame.loc[np.array([not _is_blank(values) for values in frame.itertuples(index=False)], dtype=bool)]
    if frame.empty:
        raise NoRowsError(f"{path}: no data rows")

    first, second, flag = schema.columns
    a = np.empty(len(frame))
    b = np.empty(len(frame))
    flagged = np.zeros(len(frame), dtype=bool)
    rows = frame[[first, second, flag]].itertuples(index=True)
    for row, (index, raw_a, raw_b, raw_flag) in enumerate(rows):
        line = int(index) + 2
        if not all(isinstance(raw, str) for raw in (raw_a, raw_b, raw_flag)):
            raise ParseError(line, "row has missing fields")
        for column, raw, target in ((first, raw_a, a), (second, raw_b, b)):
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(line, f"cannot parse {column}={raw!r} as a number") from None
            if not math.isfinite(value):
                raise NonFiniteValueError(line, column)
            target[row] = value
        raw_flag = raw_flag.strip()
        if raw_flag not in ("0", "1", ""):
            raise ParseError(line, f"is_waypoint must be 0 or 1, got {raw_flag!r}")
        flagged[row] = raw_flag == "1"
    return a, b, flagged


def ingest_csv(path: str | Path, schema: Schema | str = Schema.XY) -> Dataset | Track2D:
    schema = Schema(str(schema).lower())
    a, b, flagged = _read_table(path, schema)
    if schema is Schema.XY:
        return Dataset(a, b, tuple(np.flatnonzero(flagged)))
    points = np.column_stack([a, b])
    return Track2D(points[~flagged], points[flagged])


def write_dataset(data: Dataset, path: str | Path):
    frame = pd.DataFrame({"x": data.xs, "y": data.ys, "is_waypoint": data.constraint_mask.astype(int)})
    frame.to_csv(path, index=False, lineterminator="\n")


def write_track(points: np.ndarray, constraint_set, path: str | Path):
    """Augmented track (points with constrained rows flagged) in the lonlat schema."""
    mask = np.zeros(len(points), dtype=int)
    mask[list(constraint_set)] = 1
    frame = pd.DataFrame({"lon": points[:, 0], "lat": points[:, 1], "is_waypoint": mask})
    frame.to_csv(path, index=False, lineterminator="\n")
