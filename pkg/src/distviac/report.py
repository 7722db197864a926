"""Result serialization: VTK legacy, CSV, JSON run reports, output lock."""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .errors import OutputLockedError

CSV_COLUMNS = ("vertex_id", "x", "y", "phi", "distance", "exact", "abs_error")


def _fmt(x):
    # plain decimal for special values so downstream parsers stay simple
    if np.isposinf(x):
        return "inf"
    if np.isneginf(x):
        return "-inf"
    return f"{x:.17g}"


def write_vtk(path, mesh, point_scalars, title="distviac output"):
    """Legacy ASCII VTK unstructured grid with per-vertex scalar fields.

    ``point_scalars`` maps field names to length-n arrays; triangles are
    written as cell type 5.
    """
    n = mesh.n_vertices
    m = mesh.n_triangles
    lines = [
        "# vtk DataFile Version 2.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    lines += [f"{_fmt(x)} {_fmt(y)} 0.0" for x, y in mesh.vertices]
    lines.append(f"CELLS {m} {4 * m}")
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(f"CELL_TYPES {m}")
    lines += ["5"] * m
    lines.append(f"POINT_DATA {n}")
    for name, values in point_scalars.items():
        values = np.asarray(values, dtype=np.float64)
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [_fmt(v) for v in values]
    Path(path).write_text("\n".join(lines) + "\n")


def write_csv(path, mesh, phi, distance, exact=None):
    """Per-vertex CSV: vertex_id, x, y, phi, distance[, exact, abs_error]."""
    have_exact = exact is not None
    cols = CSV_COLUMNS if have_exact else CSV_COLUMNS[:5]
    rows = [",".join(cols)]
    for i in range(mesh.n_vertices):
        x, y = mesh.vertices[i]
        row = [str(i), _fmt(x), _fmt(y), _fmt(phi[i]), _fmt(distance[i])]
        if have_exact:
            row.append(_fmt(exact[i]))
            row.append(_fmt(abs(distance[i] - exact[i])))
        rows.append(",".join(row))
    Path(path).write_text("\n".join(rows) + "\n")


def write_study_csv(path, rows):
    """Convergence-study table; ``rows`` is a list of dicts sharing keys."""
    if not rows:
        raise ValueError("study produced no rows")
    cols = list(rows[0])
    out = [",".join(cols)]
    for row in rows:
        out.append(
            ",".join(
                _fmt(row[c]) if isinstance(row[c], float) else str(row[c])
                for c in cols
            )
        )
    Path(path).write_text("\n".join(out) + "\n")


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isinf(v) or np.isnan(v):
            return repr(v)
        return v
    return obj


def write_json_report(path, payload):
    """Deterministic JSON: sorted keys; timing data must live under the
    top-level "timing" key so reports are comparable without it."""
    Path(path).write_text(
        json.dumps(_jsonify(payload), indent=2, sort_keys=True) + "\n"
    )


@contextmanager
def output_lock(out_prefix):
    """One run at a time per output directory.

    Creates ``.distviac.lock`` next to the outputs with O_EXCL; a live
    lock raises :class:`OutputLockedError`.
    """
    directory = Path(out_prefix).parent
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / ".distviac.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OutputLockedError(
            f"output directory {directory} is locked by another run "
            f"(stale? remove {lock})"
        )
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        try:
            os.unlink(lock)
        except FileNotFoundError:
            pass
