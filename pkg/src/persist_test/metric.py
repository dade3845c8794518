"""Matching distance between persistence diagrams.

Each diagram is augmented with the diagonal projections of the other's
points, so both sides have ``n + m`` slots. A minimum-cost bijection is found
with the Hungarian method and the distance is ``(total cost) ** (1 / q)``,
where the cost of a pair is its Euclidean length raised to ``q`` and pairs of
two diagonal slots cost nothing. The default ``q = 2`` gives the usual
2-Wasserstein diagram distance.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .errors import InputError
from .persistence import PersistenceDiagram


def diagonal_projection(point):
    """Closest point on the diagonal and the distance to it.

    >>> diagonal_projection((1.0, 3.0))
    ((2.0, 2.0), 1.4142135623730951)
    """
    b, d = float(point[0]), float(point[1])
    if d < b:
        raise InputError(f"point ({b}, {d}) lies below the diagonal")
    mid = (b + d) / 2
    return (mid, mid), (d - b) / math.sqrt(2)


def _as_pairs(X, include_essential=True):
    if isinstance(X, PersistenceDiagram):
        pairs = X.pairs if include_essential else X.pairs[~X.essential]
    else:
        pairs = np.asarray(X, dtype=np.float64)
        if pairs.size == 0:
            pairs = np.empty((0, 2))
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise InputError(f"diagram must have shape (k, 2), got {pairs.shape}")
        if not np.all(np.isfinite(pairs)) or np.any(pairs[:, 1] < pairs[:, 0]):
            raise InputError("diagram points must be finite with birth <= death")
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    return np.ascontiguousarray(pairs)


def _check_dims(X, Y):
    if isinstance(X, PersistenceDiagram) and isinstance(Y, PersistenceDiagram) and X.dim != Y.dim:
        raise InputError(f"cannot compare diagrams of homological dimensions {X.dim} and {Y.dim}")


@numba.njit(cache=True)
def _power(dist2, q):
    # dist2 is a squared length
    if q == 2.0:
        return dist2
    if q == 1.0:
        return math.sqrt(dist2)
    return math.sqrt(dist2) ** q


@numba.njit(cache=True)
def _fill_cost(P, Q, q):
    n = P.shape[0]
    m = Q.shape[0]
    C = np.zeros((n + m, n + m))
    for i in range(n):
        for j in range(m):
            dx = P[i, 0] - Q[j, 0]
            dy = P[i, 1] - Q[j, 1]
            C[i, j] = _power(dx * dx + dy * dy, q)
        h = P[i, 1] - P[i, 0]
        c = _power(h * h / 2.0, q)
        for k in range(n):
            C[i, m + k] = c
    for j in range(m):
        h = Q[j, 1] - Q[j, 0]
        c = _power(h * h / 2.0, q)
        for k in range(m):
            C[n + k, j] = c
    return C


@numba.njit(cache=True)
def _hungarian(C):
    # shortest augmenting path with row/column potentials, O(k^3)
    k = C.shape[0]
    u = np.zeros(k + 1)
    v = np.zeros(k + 1)
    owner = np.zeros(k + 1, np.int64)
    way = np.zeros(k + 1, np.int64)
    for i in range(1, k + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(k + 1, np.inf)
        used = np.zeros(k + 1, np.bool_)
        while True:
            used[j0] = True
            i0 = owner[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, k + 1):
                if not used[j]:
                    cur = C[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(k + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while True:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
            if j0 == 0:
                break
    col_of_row = np.empty(k, np.int64)
    for j in range(1, k + 1):
        col_of_row[owner[j] - 1] = j - 1
    total = 0.0
    for i in range(k):
        total += C[i, col_of_row[i]]
    return col_of_row, total


def cost_matrix(X, Y, q=2.0, *, include_essential=True):
    """Cost matrix of the augmented matching problem.

    Rows are the ``n`` points of ``X`` followed by ``m`` diagonal slots;
    columns are the ``m`` points of ``Y`` followed by ``n`` diagonal slots.
    Any off-diagonal point may use any diagonal slot at the cost of its own
    perpendicular distance to the diagonal.
    """
    _check_dims(X, Y)
    q = _check_q(q)
    return _fill_cost(_as_pairs(X, include_essential), _as_pairs(Y, include_essential), q)


def _check_q(q):
    q = float(q)
    if not q >= 1 or not math.isfinite(q):
        raise InputError(f"cost exponent must be a finite real >= 1, got {q!r}")
    return q


def optimal_assignment(C):
    """Minimum-cost perfect matching of a square cost matrix.

    Returns
    -------
    col_of_row : ndarray of int
        ``col_of_row[i]`` is the column matched to row ``i``.
    total : float
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InputError(f"cost matrix must be square, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise InputError("cost matrix has non-finite entries")
    if C.shape[0] == 0:
        return np.empty(0, np.int64), 0.0
    return _hungarian(np.ascontiguousarray(C))


def _canonical(P, Q):
    # fixed argument order makes d(X, Y) and d(Y, X) bitwise identical
    if (len(P), P.tobytes()) > (len(Q), Q.tobytes()):
        return Q, P
    return P, Q


def matching_cost(X, Y, q=2.0, *, include_essential=True):
    """Minimum total cost of the augmented matching (the distance to the power ``q``)."""
    _check_dims(X, Y)
    q = _check_q(q)
    P, Q = _canonical(_as_pairs(X, include_essential), _as_pairs(Y, include_essential))
    if len(P) + len(Q) == 0:
        return 0.0
    return _hungarian(_fill_cost(P, Q, q))[1]


def diagram_distance(X, Y, q=2.0, *, include_essential=True):
    """Distance between two persistence diagrams.

    Parameters
    ----------
    X, Y : PersistenceDiagram or array_like of shape (k, 2)
        Diagrams of the same homological dimension.
    q : float, default 2
        Cost exponent; the result is ``(min total cost) ** (1 / q)``.
    include_essential : bool, default True
        Whether classes capped at ``r_max`` take part in the matching.
    """
    return max(matching_cost(X, Y, q, include_essential=include_essential), 0.0) ** (1.0 / float(q))


def pairwise_diagram_distances(diagrams, q=2.0, *, include_essential=True):
    """Symmetric matrix of distances between all pairs of ``diagrams``.

    Pairs are filled in row-major upper-triangle order.
    """
    diagrams = list(diagrams)
    dims = {dg.dim for dg in diagrams if isinstance(dg, PersistenceDiagram)}
    if len(dims) > 1:
        raise InputError(f"diagrams span several homological dimensions: {sorted(dims)}")
    q = _check_q(q)
    pairs = [_as_pairs(dg, include_essential) for dg in diagrams]
    n = len(pairs)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            P, Q = _canonical(pairs[i], pairs[j])
            cost = _hungarian(_fill_cost(P, Q, q))[1] if len(P) + len(Q) else 0.0
            D[i, j] = D[j, i] = max(cost, 0.0) ** (1.0 / q)
    return D
