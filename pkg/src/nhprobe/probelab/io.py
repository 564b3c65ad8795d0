"""CSV and JSON emission with a versioned, ``#``-prefixed metadata header.

A CSV file looks like::

    # nhprobe-csv 1
    # kind: sweep
    # model: "model_ii"
    v,lambda_sim,lambda_pred
    -2.5,-5.39,-5.37

Metadata values are JSON encoded. Floats are written with ``repr`` so files
round-trip exactly and are byte-identical across repeated runs.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from pathlib import Path
from typing import Mapping

import numpy as np

CSV_SCHEMA = "nhprobe-csv"
CSV_VERSION = 1


def to_jsonable(obj):
    """Recursively convert numpy, complex and enum values to JSON types."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _num(obj.real), "im": _num(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, enum.Enum):
        return str(x.value)
    return str(x)


def format_csv(columns: Mapping[str, object], meta: Mapping | None = None, kind: str = "table") -> str:
    """CSV text for equal-length ``columns`` under a metadata header.

    Complex columns are split into ``<name>_re`` and ``<name>_im``.
    """
    cols: dict[str, np.ndarray] = {}
    for name, data in columns.items():
        arr = np.asarray(data)
        if np.iscomplexobj(arr):
            cols[f"{name}_re"] = arr.real
            cols[f"{name}_im"] = arr.imag
        else:
            cols[name] = arr
    sizes = {arr.shape[0] for arr in cols.values()}
    if len(sizes) > 1:
        raise ValueError(f"columns have unequal lengths {sorted(sizes)}")
    fh = io.StringIO()
    fh.write(f"# {CSV_SCHEMA} {CSV_VERSION}\n")
    fh.write(f"# kind: {kind}\n")
    for k, v in (meta or {}).items():
        fh.write(f"# {k}: {json.dumps(to_jsonable(v), sort_keys=True)}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(list(cols))
    n = sizes.pop() if sizes else 0
    for i in range(n):
        w.writerow([_cell(arr[i]) for arr in cols.values()])
    return fh.getvalue()


def write_csv(path, columns: Mapping[str, object], meta: Mapping | None = None, kind: str = "table") -> Path:
    """Write :func:`format_csv` output to ``path`` (parent directories created)."""
    path = Path(path)
    text = format_csv(columns, meta, kind)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def read_csv(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Inverse of :func:`write_csv`: ``(meta, columns)``.

    Numeric columns come back as float arrays, others as string arrays.
    ``meta`` includes ``kind`` and the schema ``version``.
    """
    path = Path(path)
    meta: dict = {}
    with path.open(newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            text = line[1:].strip()
            if text.startswith(CSV_SCHEMA):
                meta["version"] = int(text.split()[1])
            elif ":" in text:
                k, v = text.split(":", 1)
                v = v.strip()
                try:
                    meta[k.strip()] = json.loads(v)
                except json.JSONDecodeError:
                    meta[k.strip()] = v
        else:
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        return meta, {}
    header, data = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in data]
        try:
            out[name] = np.array([float(x) for x in vals])
        except ValueError:
            out[name] = np.array(vals)
    return meta, out


def write_json(path, obj) -> Path:
    """Deterministic JSON (sorted keys, fixed indentation, trailing newline)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n")
    return path


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2)


def write_trajectory(path, traj, meta: Mapping | None = None) -> Path:
    """Long-format field dump ``t, n, re_a, im_a, re_b, im_b, log_scale``.

    ``n`` counts cells relative to the seed; stored amplitudes times
    ``exp(log_scale)`` give the true field.
    """
    nt, nc = traj.a.shape
    n = np.arange(nc) - traj.center
    cols = {
        "t": np.repeat(traj.times, nc),
        "n": np.tile(n, nt),
        "re_a": traj.a.real.ravel(),
        "im_a": traj.a.imag.ravel(),
        "re_b": traj.b.real.ravel(),
        "im_b": traj.b.imag.ravel(),
        "log_scale": np.repeat(traj.log_scale, nc),
    }
    return write_csv(path, cols, meta, kind="trajectory")


def write_ray_traces(path, traces, meta: Mapping | None = None) -> Path:
    """Ray samples ``v, t, log_abs_psi`` for one or more traces."""
    v, t, y = [], [], []
    for tr in traces:
        v.extend([tr.velocity] * len(tr.times))
        t.extend(tr.times)
        y.extend(tr.log_abs_psi)
    return write_csv(path, {"v": np.array(v, dtype=float), "t": np.array(t, dtype=float),
                            "log_abs_psi": np.array(y, dtype=float)}, meta, kind="ray")


def spectrum_columns(spec) -> dict[str, np.ndarray]:
    """Columns ``param, re_E, im_E, re_E2, im_E2, provenance, N, branch, isolated``."""
    e = spec.energies
    e2 = spec.energy_sq
    n = e.size
    return {
        "param": spec.parameter,
        "re_E": e.real, "im_E": e.imag,
        "re_E2": e2.real, "im_E2": e2.imag,
        "provenance": np.full(n, spec.provenance.value),
        "N": np.full(n, -1 if spec.cells is None else int(spec.cells)),
        "branch": spec.branch,
        "isolated": spec.isolated,
    }
