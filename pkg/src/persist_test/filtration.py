"""Vietoris-Rips filtrations of finite point clouds.

A simplex enters the filtration at its diameter, the largest pairwise
Euclidean distance among its vertices. Comparisons against the scale
parameter are closed, so an edge of length 4 is present at scale 4.
"""

from __future__ import annotations

from typing import Iterator, NamedTuple

import numpy as np

from .errors import ConsistencyError, InputError, ResourceError

DEFAULT_SIMPLEX_BUDGET = 5_000_000

# candidate block size for vectorised coface enumeration (rows x vertices)
_CHUNK_CELLS = 1 << 22


class Simplex(NamedTuple):
    vertices: tuple
    filtration: float

    @property
    def dim(self):
        return len(self.vertices) - 1


def check_point_cloud(X, name="point cloud"):
    """Validate a point cloud and return it as a C-contiguous float64 array.

    A 1-d input is read as points on the line.
    """
    try:
        arr = np.asarray(X, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} is not a rectangular numeric array: {exc}") from None
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional (points x coordinates), got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise InputError(f"{name} is empty")
    if arr.shape[1] == 0:
        raise InputError(f"{name} has zero coordinates per point")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise InputError(f"{name} has a non-finite coordinate at point {bad[0]}, column {bad[1]}")
    return np.ascontiguousarray(arr)


def check_distance_matrix(D, name="distance matrix"):
    D = check_point_cloud(D, name)
    if D.shape[0] != D.shape[1]:
        raise InputError(f"{name} must be square, got shape {D.shape}")
    if np.any(D < 0):
        raise InputError(f"{name} has negative entries")
    if np.any(np.diag(D) != 0):
        raise InputError(f"{name} must have a zero diagonal")
    if not np.array_equal(D, D.T):
        raise InputError(f"{name} is not symmetric")
    return D


def pairwise_distances(cloud):
    """Euclidean distance matrix of a point cloud.

    The result is exactly symmetric with an exactly zero diagonal.
    """
    X = check_point_cloud(cloud)
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


class FilteredComplex:
    """Vietoris-Rips complex up to ``max_dim``, truncated at scale ``r_max``.

    Simplices of each dimension ``d`` are stored as an integer array
    ``simplices[d]`` of shape ``(K_d, d + 1)`` with ascending vertex indices,
    ordered by (filtration value, lexicographic vertices); ``values[d]`` holds
    the matching filtration values. The global filtration order sorts by
    (value, dimension, vertices), which places every simplex after its faces.
    """

    def __init__(self, simplices, values, max_dim, r_max, n_vertices):
        self.simplices = tuple(np.asarray(s, dtype=np.int64) for s in simplices)
        self.values = tuple(np.asarray(v, dtype=np.float64) for v in values)
        self.max_dim = int(max_dim)
        self.r_max = float(r_max)
        self.n_vertices = int(n_vertices)
        self._order = None

    def __len__(self):
        return sum(len(v) for v in self.values)

    def __iter__(self) -> Iterator[Simplex]:
        dims, local = self.order()
        for d, i in zip(dims.tolist(), local.tolist()):
            yield Simplex(tuple(self.simplices[d][i].tolist()), float(self.values[d][i]))

    def __eq__(self, other):
        if not isinstance(other, FilteredComplex):
            return NotImplemented
        if (self.max_dim, self.r_max, self.n_vertices) != (other.max_dim, other.r_max, other.n_vertices):
            return False
        return all(
            np.array_equal(a, b) for a, b in zip(self.simplices + self.values, other.simplices + other.values)
        )

    def __repr__(self):
        counts = ", ".join(str(len(v)) for v in self.values)
        return f"FilteredComplex(counts=[{counts}], max_dim={self.max_dim}, r_max={self.r_max!r})"

    def counts(self):
        """Number of simplices in each dimension."""
        return [len(v) for v in self.values]

    def order(self):
        """Global filtration order as ``(dims, local_indices)`` arrays."""
        if self._order is None:
            dims = np.concatenate([np.full(len(v), d, dtype=np.int64) for d, v in enumerate(self.values)])
            local = np.concatenate([np.arange(len(v), dtype=np.int64) for v in self.values])
            vals = np.concatenate(self.values)
            perm = np.lexsort((local, dims, vals))
            self._order = (dims[perm], local[perm])
        return self._order

    def global_index(self):
        """Per-dimension arrays mapping local index to global filtration position."""
        dims, local = self.order()
        out = [np.empty(len(v), dtype=np.int64) for v in self.values]
        pos = np.arange(len(dims), dtype=np.int64)
        for d in range(len(out)):
            mask = dims == d
            out[d][local[mask]] = pos[mask]
        return out

    def facets(self, d):
        """Local indices (into dimension ``d - 1``) of the facets of every ``d``-simplex.

        Rows are sorted ascending. Raises ``ConsistencyError`` if a facet is missing.
        """
        if d < 1 or d > self.max_dim:
            raise InputError(f"facets requested for dimension {d}, complex has 1..{self.max_dim}")
        S = self.simplices[d]
        K = len(S)
        if K == 0:
            return np.empty((0, d + 1), dtype=np.int64)
        lower = self.simplices[d - 1]
        keys = _encode(lower, self.n_vertices)
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        out = np.empty((K, d + 1), dtype=np.int64)
        for drop in range(d + 1):
            face = np.delete(S, drop, axis=1)
            fk = _encode(face, self.n_vertices)
            pos = np.searchsorted(sorted_keys, fk)
            pos = np.minimum(pos, len(sorted_keys) - 1)
            if len(sorted_keys) == 0 or np.any(sorted_keys[pos] != fk):
                bad = int(np.flatnonzero(sorted_keys[pos] != fk)[0]) if len(sorted_keys) else 0
                raise ConsistencyError(
                    f"face {tuple(face[bad].tolist())} of simplex {tuple(S[bad].tolist())} is not in the complex"
                )
            out[:, drop] = order[pos]
        out.sort(axis=1)
        return out

    def validate(self):
        """Check face closure, monotone values and the r_max cap."""
        for d, (S, v) in enumerate(zip(self.simplices, self.values)):
            if len(v) and (v.max() > self.r_max or v.min() < 0):
                raise ConsistencyError(f"dimension {d} has filtration values outside [0, r_max]")
            if d == 0:
                continue
            if len(S) and np.any(np.diff(S, axis=1) <= 0):
                raise ConsistencyError(f"dimension {d} has unsorted or repeated vertices")
            F = self.facets(d)
            if len(F) and np.any(self.values[d - 1][F].max(axis=1) > v):
                raise ConsistencyError(f"a face in dimension {d - 1} enters after its coface")
        return True

    def to_text(self):
        """Line-oriented dump, one ``dim;v1,v2,...;filtration`` row per simplex."""
        return "".join(
            f"{s.dim};{','.join(map(str, s.vertices))};{s.filtration!r}\n" for s in self
        )

    @classmethod
    def from_text(cls, text, r_max, n_vertices=None):
        rows = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            try:
                d, verts, val = line.split(";")
                vs = tuple(int(x) for x in verts.split(","))
                rows.setdefault(int(d), []).append((float(val), vs))
            except ValueError:
                raise InputError(f"line {lineno}: expected 'dim;v1,v2,...;filtration', got {line!r}") from None
        max_dim = max([1, *rows])
        simplices, values = [], []
        for d in range(max_dim + 1):
            entries = sorted(rows.get(d, []))
            simplices.append(np.array([e[1] for e in entries], dtype=np.int64).reshape(-1, d + 1))
            values.append(np.array([e[0] for e in entries], dtype=np.float64))
        if n_vertices is None:
            n_vertices = int(simplices[0].max()) + 1 if len(simplices[0]) else 0
        fc = cls(simplices, values, max_dim, r_max, n_vertices)
        fc.validate()
        return fc


def _encode(S, n):
    """Injective int64 code for rows of sorted vertex indices (base-``n`` digits)."""
    if S.shape[1] * np.log2(max(n, 2)) >= 62:
        raise ResourceError(f"cannot index {S.shape[1]}-vertex simplices over {n} vertices with int64 keys")
    code = np.zeros(len(S), dtype=np.int64)
    for j in range(S.shape[1]):
        code = code * n + S[:, j]
    return code


def _sort_dim(S, v):
    keys = [S[:, j] for j in range(S.shape[1] - 1, -1, -1)] + [v]
    perm = np.lexsort(keys)
    return S[perm], v[perm]


def build_filtration(cloud, max_dim=2, r_max=np.inf, *, metric="euclidean",
                     simplex_budget=DEFAULT_SIMPLEX_BUDGET):
    """Vietoris-Rips filtration of ``cloud`` through simplices of dimension ``max_dim``.

    Parameters
    ----------
    cloud : array_like, shape (n_points, n_coords)
        Point coordinates, or a square distance matrix when ``metric="precomputed"``.
    max_dim : int
        Largest simplex dimension built (>= 1).
    r_max : float
        Largest scale considered; simplices with diameter above it are omitted.
        ``inf`` means the full complex, in which case ``r_max`` is recorded as
        the cloud diameter (or 1.0 for a single point).
    simplex_budget : int
        Upper bound on the total number of simplices.

    Returns
    -------
    FilteredComplex
    """
    if metric == "euclidean":
        D = pairwise_distances(cloud)
    elif metric == "precomputed":
        D = check_distance_matrix(cloud)
    else:
        raise InputError(f"unknown metric {metric!r}; use 'euclidean' or 'precomputed'")
    if int(max_dim) != max_dim or max_dim < 1:
        raise InputError(f"max_dim must be an integer >= 1, got {max_dim!r}")
    max_dim = int(max_dim)
    r_max = float(r_max)
    if not r_max > 0:
        raise InputError(f"r_max must be > 0, got {r_max!r}")
    n = D.shape[0]
    if np.isinf(r_max):
        r_max = float(D.max()) if n > 1 and D.max() > 0 else 1.0
    if n > simplex_budget:
        raise ResourceError(f"{n} vertices exceed the simplex budget of {simplex_budget}", simplex_budget)

    simplices = [np.arange(n, dtype=np.int64).reshape(-1, 1)]
    values = [np.zeros(n)]
    total = n
    for d in range(1, max_dim + 1):
        prev, prev_val = simplices[-1], values[-1]
        new_s, new_v = [], []
        step = max(1, _CHUNK_CELLS // max(n, 1))
        for lo in range(0, len(prev), step):
            P, pv = prev[lo:lo + step], prev_val[lo:lo + step]
            diam = np.maximum(pv[:, None], D[P].max(axis=1))
            ok = (diam <= r_max) & (np.arange(n)[None, :] > P[:, -1:])
            rows, cols = np.nonzero(ok)
            total += len(rows)
            if total > simplex_budget:
                raise ResourceError(
                    f"Vietoris-Rips complex exceeds the simplex budget of {simplex_budget} "
                    f"while building dimension {d}; lower r_max or max_dim",
                    simplex_budget,
                )
            new_s.append(np.column_stack([P[rows], cols]))
            new_v.append(diam[rows, cols])
        S = np.concatenate(new_s) if new_s else np.empty((0, d + 1), dtype=np.int64)
        v = np.concatenate(new_v) if new_v else np.empty(0)
        S, v = _sort_dim(S.astype(np.int64).reshape(-1, d + 1), v)
        simplices.append(S)
        values.append(v)
    return FilteredComplex(simplices, values, max_dim, r_max, n)


def complex_at(fc, r):
    """Subcomplex of simplices with filtration value <= ``r``."""
    r = float(r)
    if not 0 <= r <= fc.r_max:
        raise InputError(f"scale {r!r} outside [0, r_max={fc.r_max!r}]")
    simplices, values = [], []
    for S, v in zip(fc.simplices, fc.values):
        # within a dimension the values are sorted
        k = int(np.searchsorted(v, r, side="right"))
        simplices.append(S[:k])
        values.append(v[:k])
    return FilteredComplex(simplices, values, fc.max_dim, fc.r_max, fc.n_vertices)
