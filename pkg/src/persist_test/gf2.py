"""Dense linear algebra over Z/2 with vectors packed into Python integers.

Bit ``i`` of a vector is its ``i``-th coordinate. Meant for small matrices
(oracles, worked examples); the persistence pipeline does not use it.
"""

import numpy as np


def columns_to_bits(M):
    """Pack the columns of a 0/1 matrix (rows x cols) into integers."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[1] == 0:
        return []
    packed = np.packbits((M % 2).astype(np.uint8).T, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def rank(vectors):
    basis = {}
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    return len(basis)


def nullspace(vectors):
    """Basis of ``{x : sum_j x_j * vectors[j] = 0}``, each element packed over column indices."""
    basis = {}
    kernel = []
    for j, v in enumerate(vectors):
        combo = 1 << j
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = (v, combo)
                break
            bv, bc = basis[top]
            v ^= bv
            combo ^= bc
        if not v:
            kernel.append(combo)
    return kernel


def apply(vectors, x):
    """Matrix-vector product: XOR of ``vectors[j]`` over the set bits ``j`` of ``x``."""
    out = 0
    j = 0
    while x:
        if x & 1:
            out ^= vectors[j]
        x >>= 1
        j += 1
    return out
