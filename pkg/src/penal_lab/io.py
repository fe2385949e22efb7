"""CSV output shared by all result types."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


def _fmt(v: object) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer, bool, np.bool_)):
        return str(int(v)) if not isinstance(v, (bool, np.bool_)) else str(bool(v))
    return str(v)


def csv_text(columns: Mapping[str, Sequence[object]]) -> str:
    """Render equal-length columns as CSV with round-trip float formatting."""
    names = list(columns)
    cols = [list(np.asarray(columns[k], dtype=object).ravel()) for k in names]
    n = {len(c) for c in cols}
    if len(n) > 1:
        raise ValueError(f"column lengths differ: {sorted(n)}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, columns: Mapping[str, Sequence[object]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(columns))
    return path


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in body]
        try:
            out[name] = np.array([float(v) for v in vals])
        except ValueError:
            out[name] = np.array(vals, dtype=object)
    return out
