"""Deterministic CSV/JSON output.

Floats are written with 17 significant digits so every double survives a
text round trip; files use LF line endings regardless of platform.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import TminlagError


class OutputError(TminlagError, OSError):
    """Writing an artifact failed; the message names the path."""


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _write(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_csv(path, header, rows) -> Path:
    return _write(path, csv_text(header, rows))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    return _write(path, json_text(obj))


@dataclass
class GridField:
    """Scalar fields sampled at a list of points."""

    points: np.ndarray
    fields: dict

    def header(self) -> list[str]:
        n = self.points.shape[1]
        return [f"x{i + 1}" for i in range(n)] + list(self.fields)

    def rows(self):
        cols = [np.asarray(v) for v in self.fields.values()]
        for i, p in enumerate(self.points):
            yield [*p, *(c[i] for c in cols)]


def plot_table(obj) -> tuple[list[str], list]:
    """Header and rows for a trajectory, geodesic or grid field."""
    from .flow import Trajectory
    from .hsiang_lawson import HLGeodesic

    if isinstance(obj, GridField):
        return obj.header(), list(obj.rows())
    if isinstance(obj, Trajectory):
        n = obj.x.shape[1] if obj.x.ndim == 2 else 0
        header = ["t"] + [f"x{i + 1}" for i in range(n)] + ["V", "speed"]
        V = obj.V if obj.V is not None else np.full(len(obj.t), np.nan)
        speed = np.linalg.norm(obj.velocity, axis=1) if len(obj.t) else []
        return header, [[t, *x, v, s] for t, x, v, s in zip(obj.t, obj.x, V, speed)]
    if isinstance(obj, HLGeodesic):
        n = obj.x.shape[1] if obj.x.ndim == 2 else 0
        header = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"v{i + 1}" for i in range(n)]
                  + ["speed2"])
        return header, [[t, *x, *v, s] for t, x, v, s in zip(obj.t, obj.x, obj.v, obj.speed2)]
    raise TypeError(f"cannot tabulate {type(obj).__name__}")


def emit_plot_data(obj, path) -> Path:
    header, rows = plot_table(obj)
    return write_csv(path, header, rows)


def output_dir(cli_value) -> Path | None:
    """``TMINLAG_OUT`` takes precedence over ``--out``."""
    env = os.environ.get("TMINLAG_OUT")
    if env:
        return Path(env)
    return Path(cli_value) if cli_value else None
