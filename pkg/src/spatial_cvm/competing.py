"""Mantel, cross-K and distance-covariance tests with adaptive permutations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from ._permsum import permuted_abs_diff_dot, permuted_frobenius
from .seeding import derive_seed


@dataclass(frozen=True)
class PermutationPolicy:
    b_max: int = 999
    b_min: int = 99
    epsilon: float = 0.02
    alpha: float = 0.05

    def __post_init__(self):
        if not 1 <= self.b_min <= self.b_max:
            raise ValueError("need 1 <= b_min <= b_max")


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    p_value: float
    permutations: int
    stopped_early: bool
    degenerate: bool = False

    def reject(self, alpha: float = 0.05) -> bool:
        return self.p_value <= alpha


def _degenerate(statistic: float = 0.0) -> TestOutcome:
    return TestOutcome(statistic=statistic, p_value=1.0, permutations=0,
                       stopped_early=False, degenerate=True)


def adaptive_permutation_loop(stat_fn: Callable[[int], float], observed: float,
                              policy: PermutationPolicy):
    """Run permutations ``b = 0, 1, ...`` until ``b_max`` or the stopping rule.

    ``stat_fn(b)`` returns the statistic for permutation ``b``.  After at
    least ``b_min`` permutations the loop exits as soon as the running
    estimate ``(count + 1) / (b + 1)`` is more than ``epsilon`` from ``alpha``.
    Returns ``(p, permutations_used, stopped_early)``.
    """
    count = 0
    used = 0
    for b in range(policy.b_max):
        if stat_fn(b) >= observed:
            count += 1
        used = b + 1
        if used >= policy.b_min and used < policy.b_max:
            p_hat = (count + 1) / (used + 1)
            if abs(p_hat - policy.alpha) > policy.epsilon:
                return p_hat, used, True
    return (count + 1) / (used + 1), used, False


def _permutation(seed: int, b: int, n: int) -> np.ndarray:
    return np.random.default_rng(derive_seed(seed, b)).permutation(n)


def lattice_coords(m: int, unit: bool = True) -> np.ndarray:
    """Row-major ``(row, col)`` coordinates, scaled to ``[0, 1]^2`` if ``unit``."""
    r, c = np.divmod(np.arange(m * m), m)
    xy = np.column_stack([r, c]).astype(float)
    return xy / (m - 1) if unit and m > 1 else xy


def mantel_test(u, v, coords, policy: PermutationPolicy = PermutationPolicy(),
                seed: int = 0) -> TestOutcome:
    """Correlation between spatial distances and ``|v_i - v_j|``.

    ``u`` is accepted for interface symmetry; permuting ``V`` relative to ``U``
    permutes the rows and columns of the ``V`` distance matrix.  One-sided:
    large positive correlation is evidence against the null.
    """
    v = np.asarray(v, dtype=float).ravel()
    coords = np.asarray(coords, dtype=float)
    n = v.size
    if n < 3:
        raise ValueError("Mantel test needs at least 3 sites")
    if coords.shape[0] != n:
        raise ValueError("coords and data differ in length")
    iu, ju = np.triu_indices(n, k=1)
    ds = np.linalg.norm(coords[iu] - coords[ju], axis=1)
    ds = ds - ds.mean()
    ds_norm = np.sqrt(ds @ ds)
    dv = np.abs(v[iu] - v[ju])
    dv_c = dv - dv.mean()
    dv_norm = np.sqrt(dv_c @ dv_c)
    if dv_norm == 0.0 or ds_norm == 0.0:
        return _degenerate()
    # the multiset of |v_i - v_j| is permutation invariant, so only the cross
    # product with the centred spatial distances changes
    weights = np.zeros((n, n))
    weights[iu, ju] = ds
    scale = ds_norm * dv_norm
    identity = np.arange(n)
    observed = permuted_abs_diff_dot(weights, v, identity) / scale

    def stat(b):
        return permuted_abs_diff_dot(weights, v, _permutation(seed, b, n)) / scale

    # ties within rounding count as exceedances
    p, used, early = adaptive_permutation_loop(stat, observed - 1e-12, policy)
    return TestOutcome(observed, p, used, early)


def default_radii(side: float = 1.0, count: int = 20) -> np.ndarray:
    return np.linspace(side / 4.0 / count, side / 4.0, count)


@dataclass
class _CrossPairs:
    i: np.ndarray
    j: np.ndarray
    first_bin: np.ndarray
    n_radii: int


def _cross_pairs(coords: np.ndarray, radii: np.ndarray) -> _CrossPairs:
    tree = cKDTree(coords)
    r_max = float(radii.max()) if radii.size else 0.0
    pairs = tree.query_pairs(r_max, output_type="ndarray") if r_max > 0 else np.empty((0, 2), int)
    d = np.linalg.norm(coords[pairs[:, 0]] - coords[pairs[:, 1]], axis=1) if len(pairs) else np.empty(0)
    # smallest radius index with d <= r; radii must be sorted
    first = np.searchsorted(radii, d - 1e-12, side="left")
    return _CrossPairs(pairs[:, 0], pairs[:, 1], first, radii.size)


def cross_k_function(labels: np.ndarray, pairs: _CrossPairs, radii: np.ndarray,
                     area: float) -> np.ndarray:
    """Border-biased cross-K estimate ``area / (n1 n2) * #{type1-type2 pairs <= r}``."""
    n1 = int(labels.sum())
    n2 = labels.size - n1
    cross = labels[pairs.i] != labels[pairs.j]
    counts = np.cumsum(np.bincount(pairs.first_bin[cross], minlength=pairs.n_radii + 1))
    counts = counts[: pairs.n_radii].astype(float)
    return area * counts / (n1 * n2)


def cross_k_test(u, v, coords, radii=None, policy: PermutationPolicy = PermutationPolicy(),
                 seed: int = 0, area: float | None = None) -> TestOutcome:
    """``max_r |K12(r) - pi r^2|`` with types from the median split of ``U``.

    Inference permutes the type labels.  ``v`` is unused by the statistic.
    """
    u = np.asarray(u, dtype=float).ravel()
    coords = np.asarray(coords, dtype=float)
    n = u.size
    if n < 4:
        raise ValueError("cross-K test needs at least 4 sites")
    if radii is None:
        side = float(np.ptp(coords, axis=0).max()) or 1.0
        radii = default_radii(side)
    radii = np.sort(np.asarray(radii, dtype=float))
    if area is None:
        area = float(np.prod(np.ptp(coords, axis=0))) or 1.0
    labels = u < np.median(u)
    if labels.all() or not labels.any():
        return _degenerate()
    pairs = _cross_pairs(coords, radii)
    target = np.pi * radii**2

    def statistic(lab):
        return float(np.max(np.abs(cross_k_function(lab, pairs, radii, area) - target)))

    observed = statistic(labels)

    def stat(b):
        return statistic(labels[_permutation(seed, b, n)])

    p, used, early = adaptive_permutation_loop(stat, observed - 1e-12, policy)
    return TestOutcome(observed, p, used, early)


def double_centered_distances(x: np.ndarray) -> np.ndarray:
    d = np.abs(x[:, None] - x[None, :])
    return d - d.mean(axis=0)[None, :] - d.mean(axis=1)[:, None] + d.mean()


def dcov_statistic(u, v) -> float:
    """``n * dCov_n^2 = sum_ij A_ij B_ij / n^2``."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    a = double_centered_distances(u)
    b = double_centered_distances(v)
    return float(np.einsum("ij,ij->", a, b)) / u.size**2


def distance_covariance_test(u, v, policy: PermutationPolicy = PermutationPolicy(),
                             seed: int = 0) -> TestOutcome:
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    n = u.size
    if n < 4:
        raise ValueError("distance covariance test needs at least 4 sites")
    if u.size != v.size:
        raise ValueError("U and V differ in length")
    if np.ptp(u) == 0.0 or np.ptp(v) == 0.0:
        return _degenerate(0.0)
    a = double_centered_distances(u)
    b = double_centered_distances(v)
    n2 = float(n * n)
    observed = permuted_frobenius(a, b, np.arange(n)) / n2

    def stat(k):
        return permuted_frobenius(a, b, _permutation(seed, k, n)) / n2

    p, used, early = adaptive_permutation_loop(stat, observed - 1e-12 * abs(observed), policy)
    return TestOutcome(observed, p, used, early)
