"""Deterministic writers for reports, field dumps and heatmaps."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj):
    # json writes floats with repr, which round-trips exactly
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def write_field_csv(path, values, component):
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={n}, component={component}\n")
        for row in values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_field_csv(path):
    return np.loadtxt(path, delimiter=",", comments="#")


def write_pgm(path, values):
    """8-bit binary PGM, min-max normalised; row ``r`` of the image is ``y_j``
    from top (largest y) to bottom. Returns the scale and writes it to
    ``<path>.json``."""
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    scaled = np.zeros_like(values) if span == 0.0 else (values - lo) / span
    img = np.round(scaled * 255.0).astype(np.uint8).T[::-1]
    rows, cols = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    scale = {"min": lo, "max": hi, "levels": 255}
    write_json(str(path) + ".json", scale)
    return scale


def read_pgm(path):
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    cols, rows = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: rows * cols], dtype=np.uint8).reshape(rows, cols)
