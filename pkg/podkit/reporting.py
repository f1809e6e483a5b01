"""JSON reports and CSV tables/plot series written by the command-line pipeline."""

import csv
import io
import json
import logging
import math
import os
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from podkit import __version__
from podkit.storage import ContainerError, digest_bytes

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("schema", "seed", "tool_version", "input_digests")


class PlotKind(Enum):
    DERIV_NORMS = "deriv_norms"
    MODE_NORMS = "mode_norms"
    SIGMA_TAIL = "sigma_tail"
    ERROR_VS_R = "error_vs_r"


# (x, y) column names of each plot series
PLOT_COLUMNS = {
    PlotKind.DERIV_NORMS: ("t", "norm"),
    PlotKind.MODE_NORMS: ("k", "norm"),
    PlotKind.SIGMA_TAIL: ("r", "tail"),
    PlotKind.ERROR_VS_R: ("r", "max_error"),
}


def clean(value):
    """JSON-ready copy of `value`: numpy scalars and arrays unwrapped, non-finite floats as None."""
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [clean(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def make_report(schema: str, body: dict, seed: int, input_digests: Optional[Dict[str, str]] = None) -> dict:
    report = {
        "schema": schema,
        "seed": seed,
        "tool_version": __version__,
        "input_digests": dict(input_digests or {}),
    }
    report.update(body)
    return report


def validate_report(report: dict):
    missing = [key for key in REQUIRED_KEYS if key not in report]
    if missing:
        raise ContainerError(f"report is missing {', '.join(missing)}")
    if not isinstance(report["input_digests"], dict):
        raise ContainerError("input_digests must be an object")
    if not isinstance(report["schema"], str) or not report["schema"]:
        raise ContainerError("schema must be a nonempty string")


def dumps_report(report: dict) -> str:
    validate_report(report)
    return json.dumps(clean(report), indent=2, ensure_ascii=False, sort_keys=True, allow_nan=False) + "\n"


def write_report(path: str, report: dict) -> str:
    """Validate and write a report; returns the digest of the written bytes."""
    text = dumps_report(report)
    data = text.encode("utf-8")
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "wb") as f:
            f.write(data)
    except OSError as e:
        raise ContainerError(f"Cannot write {path}: {e}") from e
    logger.info("Wrote report %s", path)
    return digest_bytes(data)


def _cell(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return format(value, ".17g") if math.isfinite(value) else ""
    if isinstance(value, Enum):
        return value.value
    return value


def csv_text(rows: Iterable[dict], fieldnames: Sequence[str]) -> str:
    output = io.StringIO()
    writer = csv.DictWriter(output, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _cell(value) for key, value in row.items()})
    return output.getvalue()


def write_csv(path: str, rows: List[dict], fieldnames: Optional[Sequence[str]] = None) -> str:
    """Write dict rows as CSV; columns default to the keys of the first row."""
    if fieldnames is None:
        fieldnames = list(rows[0].keys()) if rows else []
    data = csv_text(rows, fieldnames).encode("utf-8")
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "wb") as f:
            f.write(data)
    except OSError as e:
        raise ContainerError(f"Cannot write {path}: {e}") from e
    return digest_bytes(data)


def write_plot_series(path: str, kind, x, y) -> str:
    """Two-column CSV of a plot series, in the given order."""
    kind = PlotKind(kind)
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ContainerError(f"{kind.value}: {x.size} x values but {y.size} y values")
    x_name, y_name = PLOT_COLUMNS[kind]
    integral_x = kind in (PlotKind.MODE_NORMS, PlotKind.SIGMA_TAIL, PlotKind.ERROR_VS_R)
    rows = [{x_name: int(a) if integral_x else a, y_name: b} for a, b in zip(x, y)]
    return write_csv(path, rows, (x_name, y_name))
