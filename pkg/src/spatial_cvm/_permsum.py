"""Compiled inner loops for permutation statistics."""
from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def permuted_frobenius(a, b, perm):
    """``sum_ij a[i, j] * b[perm[i], perm[j]]`` for symmetric ``a`` and ``b``."""
    n = a.shape[0]
    total = 0.0
    for i in range(n):
        pi = perm[i]
        row = 0.0
        for j in range(i + 1, n):
            row += a[i, j] * b[pi, perm[j]]
        total += 2.0 * row + a[i, i] * b[pi, pi]
    return total


@numba.njit(cache=True)
def permuted_abs_diff_dot(weights, v, perm):
    """``sum_{i<j} weights[i, j] * |v[perm[i]] - v[perm[j]]|``."""
    n = v.shape[0]
    total = 0.0
    for i in range(n):
        vi = v[perm[i]]
        for j in range(i + 1, n):
            total += weights[i, j] * abs(vi - v[perm[j]])
    return total


def frobenius(a: np.ndarray, b: np.ndarray) -> float:
    return permuted_frobenius(a, b, np.arange(a.shape[0]))


@numba.njit(cache=True)
def row_dots(mat, coefs):
    """``mat @ coefs`` summed left to right, so each row is independent of the batch shape."""
    k, J = mat.shape
    W = coefs.shape[1]
    out = np.zeros((k, W))
    for i in range(k):
        for w in range(W):
            acc = 0.0
            for j in range(J):
                acc += mat[i, j] * coefs[j, w]
            out[i, w] = acc
    return out
