"""CSV and JSON writers with deterministic formatting.

Floats are written with 17 significant digits (``%.17g``) so that values
round-trip exactly; ``-inf`` is written as the literal token ``-inf``. Rows
are written in the order given, which callers keep fixed.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "-inf" if x < 0 else "inf"
        return "%.17g" % x
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows))
    return path


def read_csv(path):
    """``(header, rows)`` with numeric cells parsed back to floats."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[_parse_cell(c) for c in row] for row in reader]
    return header, rows


def _parse_cell(cell: str):
    try:
        return float(cell)
    except ValueError:
        return cell


def jsonable(obj):
    """Recursively convert numpy scalars and non-finite floats for JSON output."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else format_value(x)
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    return obj


def json_text(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json_text(obj))
    return path


def write_field(path, fld) -> Path:
    """Write a :class:`~bergmanlab.weights.SampledField` (coords..., value)."""
    return write_csv(path, fld.header, fld.rows())


def write_points(path, export) -> Path:
    """Write a :class:`~bergmanlab.domains.GridExport` (coords..., dist_boundary)."""
    return write_csv(path, export.header, export.rows())


def write_convergence(path, report) -> Path:
    return write_csv(path, report.header, report.csv_rows())
