"""Persistent homology over Z/2 by boundary-matrix column reduction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np

from . import gf2
from .errors import ConsistencyError, InputError, ResourceError
from .filtration import FilteredComplex, complex_at

DENSE_SIMPLEX_CUTOFF = 2000


class PersistencePoint(NamedTuple):
    birth: float
    death: float
    dim: int
    essential: bool = False


class PersistenceDiagram:
    """Multiset of (birth, death) pairs in one homological dimension.

    Points are kept as an ``(k, 2)`` float array sorted by (birth, death),
    with a parallel boolean mask flagging essential classes, whose death is
    the cap ``r_max``.
    """

    def __init__(self, pairs, dim, r_max=None, essential=None):
        arr = np.asarray(pairs, dtype=np.float64)
        if arr.size == 0:
            arr = np.empty((0, 2))
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise InputError(f"diagram points must have shape (k, 2), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError("diagram points must be finite; cap essential classes at r_max")
        if np.any(arr[:, 1] < arr[:, 0]):
            raise InputError("every diagram point needs birth <= death")
        ess = np.zeros(len(arr), dtype=bool) if essential is None else np.asarray(essential, dtype=bool)
        if ess.shape != (len(arr),):
            raise InputError("essential mask must have one entry per point")
        order = np.lexsort((arr[:, 1], arr[:, 0]))
        self.pairs = arr[order]
        self.essential = ess[order]
        self.dim = int(dim)
        self.r_max = None if r_max is None else float(r_max)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        for (b, d), e in zip(self.pairs.tolist(), self.essential.tolist()):
            yield PersistencePoint(b, d, self.dim, e)

    def __eq__(self, other):
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.r_max == other.r_max
            and np.array_equal(self.pairs, other.pairs)
            and np.array_equal(self.essential, other.essential)
        )

    def __repr__(self):
        return f"PersistenceDiagram(dim={self.dim}, n_points={len(self)}, r_max={self.r_max!r})"

    def finite(self):
        """Copy without the essential classes."""
        keep = ~self.essential
        return PersistenceDiagram(self.pairs[keep], self.dim, self.r_max, self.essential[keep])


@dataclass
class BoundaryMatrix:
    """Sparse Z/2 boundary matrix in global filtration order.

    ``columns[j]`` is the sorted tuple of row indices of the facets of simplex ``j``.
    """

    columns: list
    dims: np.ndarray
    values: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.columns)


@dataclass
class Reduction:
    columns: list
    pairs: list
    essential: list


def boundary_matrix(fc: FilteredComplex) -> BoundaryMatrix:
    dims, local = fc.order()
    gidx = fc.global_index()
    columns = [()] * len(dims)
    for d in range(1, fc.max_dim + 1):
        rows = np.sort(gidx[d - 1][fc.facets(d)], axis=1)
        for j, r in zip(gidx[d].tolist(), rows.tolist()):
            columns[j] = tuple(r)
    values = np.concatenate(fc.values)[np.argsort(np.concatenate(gidx))]
    return BoundaryMatrix(columns, dims.copy(), values)


def reduce(bm: BoundaryMatrix) -> Reduction:
    """Left-to-right column reduction over Z/2.

    Returns the reduced columns, the pairs ``(i, j)`` where column ``j`` has
    lowest row ``i``, and the indices of the essential (never killed)
    positive columns.
    """
    cols = [set(c) for c in bm.columns]
    owner = {}
    pairs = []
    for j, col in enumerate(cols):
        while col:
            low = max(col)
            k = owner.get(low)
            if k is None:
                owner[low] = j
                pairs.append((low, j))
                break
            col ^= cols[k]
    killed = set(owner)
    essential = [j for j, col in enumerate(cols) if not col and j not in killed]
    return Reduction([tuple(sorted(c)) for c in cols], pairs, essential)


@numba.njit(cache=True)
def _msb(x):
    n = 0
    if x >> np.uint64(32):
        x >>= np.uint64(32)
        n += 32
    if x >> np.uint64(16):
        x >>= np.uint64(16)
        n += 16
    if x >> np.uint64(8):
        x >>= np.uint64(8)
        n += 8
    if x >> np.uint64(4):
        x >>= np.uint64(4)
        n += 4
    if x >> np.uint64(2):
        x >>= np.uint64(2)
        n += 2
    if x >> np.uint64(1):
        n += 1
    return n


@numba.njit(cache=True)
def _reduce_packed(facets, n_rows, target):
    """Reduce one dimension's columns with rows packed into 64-bit words.

    ``facets[j]`` lists the (local, ascending) rows of column ``j``. Returns
    the lowest row of each reduced column (-1 for zero columns) and the
    number of pivots. Stops once ``target`` pivots exist: every later column
    must then reduce to zero.
    """
    K = facets.shape[0]
    width = facets.shape[1]
    nw = (n_rows + 63) // 64
    low_of = np.full(K, -1, np.int64)
    slot_of_row = np.full(n_rows, -1, np.int64)
    store = np.zeros((min(K, n_rows), max(nw, 1)), np.uint64)
    buf = np.zeros(max(nw, 1), np.uint64)
    one = np.uint64(1)
    npiv = 0
    for j in range(K):
        if npiv >= target:
            break
        buf[:] = 0
        for t in range(width):
            r = facets[j, t]
            buf[r >> 6] ^= one << np.uint64(r & 63)
        top = nw - 1
        while True:
            while top >= 0 and buf[top] == 0:
                top -= 1
            if top < 0:
                break
            low = top * 64 + _msb(buf[top])
            s = slot_of_row[low]
            if s < 0:
                for k in range(top + 1):
                    store[npiv, k] = buf[k]
                slot_of_row[low] = npiv
                low_of[j] = low
                npiv += 1
                break
            for k in range(top + 1):
                buf[k] ^= store[s, k]
    return low_of, npiv


def persistence_pairs(fc: FilteredComplex, top_dim=None):
    """Lowest-row arrays per dimension from the packed reduction.

    ``lows[d][j]`` is the local index of the ``(d-1)``-simplex killed by
    ``d``-simplex ``j``, or -1 when the column reduces to zero.
    """
    top_dim = fc.max_dim if top_dim is None else top_dim
    lows = [np.full(len(fc.values[0]), -1, np.int64)]
    positive_rows = len(fc.values[0])
    for d in range(1, top_dim + 1):
        n_rows = len(fc.values[d - 1])
        low, npiv = _reduce_packed(fc.facets(d), n_rows, positive_rows)
        lows.append(low)
        positive_rows = len(low) - npiv
    return lows


def diagrams(fc: FilteredComplex, max_hom_dim=1, *, method="packed"):
    """Persistence diagrams of dimensions ``0..max_hom_dim``.

    Pairs with equal birth and death are dropped. Classes alive at ``r_max``
    become essential points ``(birth, r_max)``.

    Parameters
    ----------
    method : {"packed", "reference"}
        ``"packed"`` uses the compiled word-packed reduction, ``"reference"``
        the set-based :func:`reduce` on the full boundary matrix. Both give
        identical diagrams.
    """
    if int(max_hom_dim) != max_hom_dim or max_hom_dim < 0:
        raise InputError(f"max_hom_dim must be a non-negative integer, got {max_hom_dim!r}")
    if max_hom_dim > fc.max_dim - 1:
        raise InputError(
            f"homological dimension {max_hom_dim} needs simplices of dimension {max_hom_dim + 1}, "
            f"but the complex was built through dimension {fc.max_dim}"
        )
    if method == "packed":
        lows = persistence_pairs(fc, max_hom_dim + 1)
    elif method == "reference":
        lows = _lows_from_reduction(fc, max_hom_dim + 1)
    else:
        raise InputError(f"unknown method {method!r}")
    out = []
    for p in range(max_hom_dim + 1):
        vb, vd = fc.values[p], fc.values[p + 1]
        killer = lows[p + 1]
        has = killer >= 0
        births = vb[killer[has]]
        deaths = vd[has]
        positive = lows[p] < 0
        alive = positive.copy()
        alive[killer[has]] = False
        keep = births < deaths
        pts = np.column_stack([births[keep], deaths[keep]])
        ess = np.column_stack([vb[alive], np.full(int(alive.sum()), fc.r_max)])
        ess = ess[ess[:, 0] < fc.r_max]
        flags = np.r_[np.zeros(len(pts), bool), np.ones(len(ess), bool)]
        out.append(PersistenceDiagram(np.vstack([pts, ess]), p, fc.r_max, flags))
    return out


def _lows_from_reduction(fc, top_dim):
    bm = boundary_matrix(fc)
    red = reduce(bm)
    dims, local = fc.order()
    lows = [np.full(len(v), -1, np.int64) for v in fc.values]
    for i, j in red.pairs:
        if dims[i] != dims[j] - 1:
            raise ConsistencyError(f"pair ({i}, {j}) does not join consecutive dimensions")
        lows[dims[j]][local[j]] = local[i]
    return lows[: top_dim + 1]


def dense_boundary(fc: FilteredComplex, dim):
    """0/1 matrix of the boundary map from ``dim``-chains to ``(dim-1)``-chains.

    Rows and columns follow the per-dimension filtration order.
    """
    if dim < 0:
        raise InputError(f"dimension must be >= 0, got {dim}")
    n_cols = len(fc.values[dim]) if dim <= fc.max_dim else 0
    n_rows = len(fc.values[dim - 1]) if 1 <= dim <= fc.max_dim + 1 else 0
    M = np.zeros((n_rows, n_cols), dtype=np.uint8)
    if dim >= 1 and n_cols:
        F = fc.facets(dim)
        M[F, np.arange(n_cols)[:, None]] = 1
    return M


def _check_dense(fc, limit):
    if len(fc) > limit:
        raise ResourceError(
            f"dense rank computation limited to {limit} simplices, complex has {len(fc)}", limit
        )


def betti_at(fc: FilteredComplex, r, dim, *, limit=DENSE_SIMPLEX_CUTOFF):
    """Betti number of ``complex_at(fc, r)`` from ranks of the boundary maps.

    Independent of the reduction; dense elimination, for small complexes only.
    """
    if dim < 0:
        raise InputError(f"dimension must be >= 0, got {dim}")
    if dim > fc.max_dim:
        raise InputError(f"complex has no simplices of dimension {dim}")
    sub = complex_at(fc, r)
    _check_dense(sub, limit)
    n_dim = len(sub.values[dim])
    rank_d = gf2.rank(gf2.columns_to_bits(dense_boundary(sub, dim))) if dim >= 1 else 0
    rank_up = gf2.rank(gf2.columns_to_bits(dense_boundary(sub, dim + 1))) if dim < fc.max_dim else 0
    return n_dim - rank_d - rank_up


def persistent_betti(fc: FilteredComplex, b, d, dim, *, limit=DENSE_SIMPLEX_CUTOFF):
    """Rank of the map ``H_dim(complex_at(b)) -> H_dim(complex_at(d))`` for ``b <= d``.

    Computed as ``rank[Z_b | B_d] - rank B_d`` with dense elimination.
    """
    if not b <= d:
        raise InputError(f"need b <= d, got b={b!r}, d={d!r}")
    if dim < 0 or dim >= fc.max_dim:
        raise InputError(f"dimension {dim} outside 0..{fc.max_dim - 1}")
    _check_dense(complex_at(fc, d), limit)
    n_b = int(np.searchsorted(fc.values[dim], b, side="right"))
    if dim >= 1:
        kb = gf2.columns_to_bits(dense_boundary(fc, dim)[:, :n_b])
        cycles = gf2.nullspace(kb)
    else:
        cycles = [1 << i for i in range(n_b)]
    n_d_up = int(np.searchsorted(fc.values[dim + 1], d, side="right"))
    boundaries = gf2.columns_to_bits(dense_boundary(fc, dim + 1)[:, :n_d_up])
    return gf2.rank(cycles + boundaries) - gf2.rank(boundaries)
