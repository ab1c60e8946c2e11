"""Problem, filter, trace and report files.

Problem files are JSON objects with row-major matrices ``A, B, C, D, L, G``
and an optional ``name``.  Filter files hold ``Ahat, Bhat, Chat, Dhat`` and
optionally the ``objective`` they were designed for.  Names without a path
separator or ``.json`` suffix resolve to the files bundled in
``posfilter/data`` (``lls10``, ``filter_best``, ``filter_lls10``,
``filter_sim``).
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .design import FilterParams
from .lti import DimensionError, PlantSpec, SimulationTrace, UnstableSystemError
from .search import BenchmarkReport

PROBLEM_KEYS = ("A", "B", "C", "D", "L", "G")
FILTER_KEYS = ("Ahat", "Bhat", "Chat", "Dhat")


class InputFileError(ValueError):
    """A problem or filter file is malformed; ``field`` names the culprit."""

    def __init__(self, path, field: str | None, message: str):
        self.path = str(path)
        self.field = field
        where = f"{self.path}: field {field!r}" if field else self.path
        super().__init__(f"{where}: {message}")


def resolve(name_or_path: str | Path) -> Path:
    p = Path(name_or_path)
    if p.exists() or p.suffix == ".json" or len(p.parts) > 1:
        return p
    return Path(str(resources.files("posfilter") / "data" / f"{p.name}.json"))


def _read_json(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputFileError(path, None, exc.strerror or str(exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFileError(path, None, f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InputFileError(path, None, "top level must be a JSON object")
    return doc


def _field_matrix(path, doc: dict, key: str) -> np.ndarray:
    if key not in doc:
        raise InputFileError(path, key, "missing")
    rows = doc[key]
    if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
        raise InputFileError(path, key, "must be a list of rows (nested arrays)")
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise InputFileError(path, key, f"ragged rows with lengths {sorted(widths)}")
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputFileError(path, key, "entries must be numbers") from exc
    if arr.ndim == 1:  # [] or [[]]
        arr = arr.reshape(len(rows), 0)
    if not np.all(np.isfinite(arr)):
        raise InputFileError(path, key, "entries must be finite")
    return arr


def load_problem(name_or_path) -> tuple[PlantSpec, str]:
    path = resolve(name_or_path)
    doc = _read_json(path)
    mats = {k: _field_matrix(path, doc, k) for k in PROBLEM_KEYS}
    A, B, C, D, L, G = (mats[k] for k in PROBLEM_KEYS)
    n = A.shape[0]
    checks = [
        ("A", A.shape == (n, n), f"must be square, got {A.shape}"),
        ("B", B.shape[0] == n, f"needs {n} rows, got {B.shape[0]}"),
        ("C", C.shape[1] == n, f"needs {n} columns, got {C.shape[1]}"),
        ("L", L.shape[1] == n, f"needs {n} columns, got {L.shape[1]}"),
        ("D", D.shape == (C.shape[0], B.shape[1]), f"must be {C.shape[0]}x{B.shape[1]}, got {D.shape}"),
        ("G", G.shape == (L.shape[0], B.shape[1]), f"must be {L.shape[0]}x{B.shape[1]}, got {G.shape}"),
        ("C", C.shape[0] >= 1, "needs at least one measured output"),
        ("L", L.shape[0] >= 1, "needs at least one estimated output"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise InputFileError(path, key, msg)
    try:
        plant = PlantSpec.from_matrices(A, B, C, D, L, G)
    except UnstableSystemError as exc:
        raise InputFileError(path, "A", str(exc)) from exc
    except DimensionError as exc:
        raise InputFileError(path, None, str(exc)) from exc
    name = doc.get("name", path.stem)
    return plant, str(name)


def load_filter(name_or_path, plant: PlantSpec | None = None) -> FilterParams:
    """Read a filter file; with ``plant``, also check it fits that plant."""
    path = resolve(name_or_path)
    doc = _read_json(path)
    mats = {k: _field_matrix(path, doc, k) for k in FILTER_KEYS}
    Dh = mats["Dhat"]
    m, p = Dh.shape
    nh = mats["Ahat"].shape[0]
    shapes = {"Ahat": (nh, nh), "Bhat": (nh, p), "Chat": (m, nh)}
    for key, shape in shapes.items():
        arr = mats[key]
        if arr.size == 0 and math.prod(shape) == 0:
            mats[key] = arr.reshape(shape)
        elif arr.shape != shape:
            raise InputFileError(path, key, f"must be {shape[0]}x{shape[1]}, got {arr.shape}")
    if plant is not None and (p, m) != (plant.p, plant.m):
        raise InputFileError(path, "Dhat", f"is {m}x{p} but the plant needs {plant.m}x{plant.p}")
    return FilterParams(*(mats[k] for k in FILTER_KEYS))


def filter_to_dict(filt: FilterParams, objective: float | None = None) -> dict:
    doc = {k: M.tolist() for k, M in zip(FILTER_KEYS, filt.matrices())}
    if objective is not None:
        doc["objective"] = objective if math.isfinite(objective) else None
    return doc


def write_filter(path, filt: FilterParams, objective: float | None = None, extra: dict | None = None):
    doc = filter_to_dict(filt, objective)
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def fmt(v: float) -> str:
    """Full double precision, stable across runs."""
    return repr(float(v))


def write_trace_csv(path_or_file, trace: SimulationTrace, plant: PlantSpec, order: int):
    """Columns ``k, z, zhat, e`` (suffixed ``_1.._m`` when ``m > 1``)."""
    m, n = plant.m, plant.n
    x = trace.states[:-1, :n]
    z = x @ plant.L.T + trace.inputs @ plant.G.T
    e = trace.outputs
    zhat = z - e
    names = ["z", "zhat", "e"]
    header = ["k"] + (names if m == 1 else [f"{c}_{i + 1}" for c in names for i in range(m)])
    rows = []
    for k in range(trace.horizon):
        row = [str(k)]
        for block in (z, zhat, e):
            row += [fmt(v) for v in block[k]]
        rows.append(row)
    _write_rows(path_or_file, header, rows)


def report_columns(thresholds: Sequence[float]) -> list[str]:
    return ["method", "K", "min", "mean"] + [f"rate@{t:g}" for t in thresholds] + ["mean_time_s"]


def report_row(report: BenchmarkReport, thresholds: Sequence[float]) -> list[str]:
    row = [report.method, str(report.K), fmt(report.min_objective), fmt(report.mean_objective)]
    row += [fmt(report.success_rates[float(t)]) for t in thresholds]
    row.append(fmt(report.mean_time_s))
    return row


def write_reports_csv(path_or_file, reports: Iterable[BenchmarkReport], thresholds: Sequence[float]):
    rows = [report_row(r, thresholds) for r in reports]
    _write_rows(path_or_file, report_columns(thresholds), rows)


def write_reports_json(path, reports: Iterable[BenchmarkReport], meta: dict | None = None):
    doc = {"meta": meta or {}, "reports": [r.to_dict() for r in reports]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _write_rows(path_or_file, header, rows):
    if hasattr(path_or_file, "write"):
        w = csv.writer(path_or_file, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path_or_file, "w", newline="") as fh:
        _write_rows(fh, header, rows)


def read_input_csv(path, q: int) -> np.ndarray:
    """Disturbance samples, one row per step with ``q`` columns; a
    non-numeric first row is treated as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        rows = rows[1:]
    try:
        W = np.array(rows, dtype=float)
    except ValueError as exc:
        raise InputFileError(path, None, "disturbance entries must be numbers") from exc
    if W.ndim != 2 or W.shape[1] != q:
        raise InputFileError(path, None, f"disturbance needs {q} columns")
    return W
