"""
Deterministic text output: JSON, CSV and whitespace-delimited plot data.

Every real number is written with 12 significant digits, so identical runs
produce byte-identical files.  Files are written to a temporary name in the
target directory and moved into place.
"""

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, is_dataclass

import numpy as np

SIG_DIGITS = 12


def fmt(x):
    """``x`` with 12 significant digits; ``nan`` and ``inf`` spelled out."""
    return f"{float(x):.{SIG_DIGITS}g}"


def normalize(obj):
    """JSON-ready copy of ``obj`` with floats rounded to 12 significant digits.

    Non-finite floats become ``None``; numpy scalars and arrays, tuples and
    dataclasses are converted.
    """
    if is_dataclass(obj) and not isinstance(obj, type):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return normalize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(fmt(x)) if math.isfinite(x) else None
    return obj


def dumps_json(obj):
    return json.dumps(normalize(obj), indent=2, allow_nan=False) + "\n"


def write_text(path, text):
    """Atomically replace ``path`` with ``text``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj):
    return write_text(path, dumps_json(obj))


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


CURVE_COLUMNS = ("t", "x1", "x2", "x3", "v1", "v2", "v3", "speed", "cos_angle")
SURFACE_COLUMNS = ("t", "s", "x1", "x2", "x3", "H")


def curve_csv(curve):
    rows = np.column_stack([curve.t, curve.points, curve.velocities, curve.speed, curve.cos_angle])
    return _csv_text(CURVE_COLUMNS, rows)


def surface_rows(surface, field):
    """Interior nodes as ``(t, s, x1, x2, x3, H)`` rows, ``t`` outermost."""
    pts = surface.points[1:-1, 1:-1]
    T, S = np.meshgrid(field.t, field.s, indexing="ij")
    return np.column_stack([T.ravel(), S.ravel(), pts.reshape(-1, 3), field.values.ravel()])


def surface_csv(surface, field):
    return _csv_text(SURFACE_COLUMNS, surface_rows(surface, field))


# -- plot-ready data ---------------------------------------------------------

def curve_plot_data(curve):
    """Three columns ``x1 x2 x3``, one sample per line."""
    lines = ["# x1 x2 x3"] + [" ".join(fmt(v) for v in p) for p in curve.points]
    return "\n".join(lines) + "\n"


def surface_plot_data(surface, field):
    """Columns ``t s H`` with a blank line after each ``t`` row of the grid."""
    out = ["# t s H"]
    for i, t in enumerate(field.t):
        out.extend(f"{fmt(t)} {fmt(s)} {fmt(h)}" for s, h in zip(field.s, field.values[i]))
        out.append("")
    return "\n".join(out) + "\n"


def flatten(obj, prefix=""):
    """Nested mappings as ``(dotted.key, value)`` pairs; lists are skipped."""
    obj = normalize(obj)
    items = []
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            items.extend(flatten(v, key + "."))
        elif not isinstance(v, list):
            items.append((key, v))
    return items


def key_value_text(obj):
    def show(v):
        if v is None:
            return "nan"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return fmt(v)
        return str(v)
    return "".join(f"{k}={show(v)}\n" for k, v in flatten(obj))
