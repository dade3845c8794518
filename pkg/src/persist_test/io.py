"""CSV readers and writers for clouds, diagrams and distance matrices.

Floats are written with ``repr`` (shortest round-trip form), so a
write/read cycle reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .errors import InputError
from .persistence import PersistenceDiagram

DIAGRAM_HEADER = ["dim", "birth", "death", "essential"]


def _fmt(x):
    return repr(float(x))


def _open_rows(path):
    try:
        with open(path, newline="") as fh:
            return [row for row in csv.reader(fh)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def read_cloud(path, header=False):
    """Point cloud from CSV, one point per row; ``header=True`` skips row 1."""
    rows = _open_rows(path)
    start = 1 if header else 0
    pts = []
    for lineno, row in enumerate(rows[start:], start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            pts.append([float(c) for c in row])
        except ValueError:
            col = next(j for j, c in enumerate(row, 1) if not _is_float(c))
            raise InputError(f"{path}: unparseable cell at row {lineno}, column {col}: {row[col - 1]!r}") from None
    if not pts:
        raise InputError(f"{path}: no points")
    if len({len(p) for p in pts}) != 1:
        raise InputError(f"{path}: rows have differing numbers of coordinates")
    return np.array(pts, dtype=np.float64)


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_cloud(path, X):
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in X:
            w.writerow([_fmt(v) for v in row])


def diagrams_to_rows(diagrams):
    rows = []
    for dg in diagrams:
        for p in dg:
            rows.append((p.dim, p.birth, p.death, int(p.essential)))
    rows.sort(key=lambda r: r[:3])
    return rows


def write_diagrams(path, diagrams):
    """Write diagrams as ``dim,birth,death,essential`` rows sorted by (dim, birth, death)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGRAM_HEADER)
        for d, b, e, flag in diagrams_to_rows(diagrams):
            w.writerow([d, _fmt(b), _fmt(e), flag])


def read_diagrams(path, dims=()):
    """Diagrams keyed by homological dimension.

    A dimension without rows is absent unless listed in ``dims``, in which
    case it maps to an empty diagram.
    """
    rows = _open_rows(path)
    if not rows or [c.strip() for c in rows[0]] != DIAGRAM_HEADER:
        raise InputError(f"{path}: expected header {','.join(DIAGRAM_HEADER)}")
    by_dim = {}
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        try:
            d, b, e, flag = int(row[0]), float(row[1]), float(row[2]), int(row[3])
        except (ValueError, IndexError):
            raise InputError(f"{path}: malformed diagram row {lineno}: {row}") from None
        by_dim.setdefault(d, []).append((b, e, bool(flag)))
    out = {}
    for d, pts in by_dim.items():
        ess = [p[2] for p in pts]
        r_max = max((p[1] for p in pts if p[2]), default=None)
        out[d] = PersistenceDiagram([p[:2] for p in pts], d, r_max, ess)
    for d in dims:
        out.setdefault(int(d), PersistenceDiagram([], int(d)))
    return out


def write_distance_matrix(path, ids, D):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([str(i) for i in ids])
        for row in np.asarray(D, dtype=np.float64):
            w.writerow([_fmt(v) for v in row])


def read_distance_matrix(path):
    rows = [r for r in _open_rows(path) if r]
    if not rows:
        raise InputError(f"{path}: empty distance matrix file")
    ids = rows[0]
    try:
        D = np.array([[float(c) for c in r] for r in rows[1:]], dtype=np.float64)
    except ValueError:
        raise InputError(f"{path}: non-numeric distance entry") from None
    if D.shape != (len(ids), len(ids)):
        raise InputError(f"{path}: matrix shape {D.shape} does not match {len(ids)} identifiers")
    return ids, D


def stem(path):
    return os.path.splitext(os.path.basename(path))[0]
