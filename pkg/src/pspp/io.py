"""CSV ingestion and report emission.

Floats are written with ``repr``, the shortest decimal that round-trips to
the same double, so a report read back gives bit-identical values.  Files
are written to a temporary sibling and renamed into place.
"""

import csv
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

_NUMERAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


@dataclass(frozen=True)
class Observations:
    values: np.ndarray          # (T, p)
    names: tuple
    times: tuple | None = None

    @property
    def n_rows(self):
        return self.values.shape[0]


def _number(cell, row, col, path):
    s = cell.strip()
    if not s:
        raise DataError(f"{path}: missing value at row {row}, column {col!r}",
                        row=row, column=col, path=str(path))
    if not _NUMERAL.match(s):
        raise DataError(f"{path}: non-numeric value {s!r} at row {row}, column {col!r}",
                        row=row, column=col, path=str(path))
    return float(s)


def ingest_csv(path, columns=None, time_column=None):
    """Read a header-row CSV into an ordered (T, p) array.

    ``columns`` picks and orders the value columns; by default every column
    except ``time_column`` is used.  Rows are numbered as file lines, the
    header being line 1.  Nothing is imputed.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}", path=str(path)) from None
    if not rows or not any(c.strip() for c in rows[0]):
        raise DataError(f"{path}: empty file", path=str(path))
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header", row=1, path=str(path))
    body = [(i, r) for i, r in enumerate(rows[1:], 2) if r and any(c.strip() for c in r)]
    if not body:
        raise DataError(f"{path}: no data rows", path=str(path))
    if time_column is not None and time_column not in header:
        raise DataError(f"{path}: time column {time_column!r} not in header", row=1,
                        column=time_column, path=str(path))
    if columns is None:
        columns = [h for h in header if h != time_column]
    for c in columns:
        if c not in header:
            raise DataError(f"{path}: column {c!r} not in header", row=1, column=c, path=str(path))
    if not columns:
        raise DataError(f"{path}: no value columns", path=str(path))
    idx = [header.index(c) for c in columns]
    values = np.empty((len(body), len(columns)))
    times = []
    for k, (lineno, r) in enumerate(body):
        if len(r) != len(header):
            raise DataError(f"{path}: row {lineno} has {len(r)} cells, header has {len(header)}",
                            row=lineno, path=str(path))
        for j, (c, i) in enumerate(zip(columns, idx)):
            values[k, j] = _number(r[i], lineno, c, path)
        if time_column is not None:
            times.append(r[header.index(time_column)].strip())
    return Observations(values, tuple(columns), tuple(times) if time_column else None)


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        # undefined values (e.g. a correlation with V_ii <= 0) are left empty,
        # matching null in the JSON report
        return repr(float(x)) if math.isfinite(x) else ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def _atomic_write(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None
    return path


def write_csv(path, columns, header=None):
    """Write a dict of equal-length columns; floats via repr."""
    header = list(columns) if header is None else list(header)
    n = {len(columns[h]) for h in header}
    if len(n) > 1:
        raise ValueError("columns have different lengths")
    lines = [",".join(header)]
    for i in range(n.pop() if n else 0):
        lines.append(",".join(_fmt(columns[h][i]) for h in header))
    return _atomic_write(path, "\n".join(lines) + "\n")


def write_observations(path, ys, names=None):
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    names = names or [f"y{i}" for i in range(1, ys.shape[1] + 1)]
    return write_csv(path, {n: ys[:, j].tolist() for j, n in enumerate(names)}, names)


def series_table(reports):
    """Per-step columns for plotting: f, e, standardized e, V_hat entries and
    the pairwise correlation estimates V_ij / sqrt(V_ii V_jj)."""
    if not reports:
        return {}
    p = reports[0].f.size
    cols = {"t": list(range(1, len(reports) + 1))}
    for name, attr in (("f", "f"), ("e", "e"), ("e_std", "e_std")):
        arr = np.array([getattr(r, attr) for r in reports])
        for j in range(p):
            cols[f"{name}{j + 1}"] = arr[:, j].tolist()
    if reports[0].v_hat is not None and reports[0].v_hat.shape == (p, p):
        v = np.array([r.v_hat for r in reports])
        for j in range(p):
            for i in range(j, p):
                cols[f"V{j + 1}{i + 1}"] = v[:, i, j].tolist()
        for j in range(p):
            for i in range(j + 1, p):
                den = v[:, i, i] * v[:, j, j]
                with np.errstate(invalid="ignore"):
                    corr = np.where(den > 0, v[:, i, j] / np.sqrt(np.where(den > 0, den, 1.0)),
                                    np.nan)
                cols[f"corr{j + 1}{i + 1}"] = corr.tolist()
    return cols


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def report_dict(config, seed, metrics=None, snapshots=None, series=None):
    return {"config": config, "seed": seed, "metrics": metrics or {},
            "snapshots": snapshots or {}, "series": series or {}}


def emit_report(report, path, fmt="json"):
    """Write ``report`` (from ``report_dict``) as JSON, CSV or both.

    JSON goes to ``<path>.json``.  CSV writes the per-step series to
    ``<path>.csv`` when present, and always a flat ``<path>.metrics.csv``.
    Returns the written paths.
    """
    base = Path(path)
    if base.suffix in (".json", ".csv"):
        base = base.with_suffix("")
    written = []
    if fmt in ("json", "both"):
        text = json.dumps(_jsonable(report), indent=2, allow_nan=False) + "\n"
        written.append(_atomic_write(base.with_name(base.name + ".json"), text))
    if fmt in ("csv", "both"):
        if report.get("series"):
            written.append(write_csv(base.with_name(base.name + ".csv"), report["series"]))
        rows = {"key": [], "value": []}
        _flatten(rows, "", {"metrics": report.get("metrics", {}),
                            "snapshots": report.get("snapshots", {})})
        written.append(write_csv(base.with_name(base.name + ".metrics.csv"), rows))
    return written


def _flatten(rows, prefix, obj):
    obj = _jsonable(obj)
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(rows, f"{prefix}.{k}" if prefix else k, v)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(rows, f"{prefix}[{i}]", v)
    else:
        rows["key"].append(prefix)
        rows["value"].append("" if obj is None else obj)
