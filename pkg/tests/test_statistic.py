import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from numpy.polynomial import polynomial as P

from spatial_cvm import weights as wt
from spatial_cvm.copula import gaussian_copula_pair
from spatial_cvm.matern import MaternParams, generate_independent_bivariate_field, pit_transform
from spatial_cvm.statistic import compute_cvm_statistic, cvm_permutation_pvalue, kernel_matrix

BUILTINS = list(wt.BUILTIN_WEIGHTS)
QUICK = MaternParams(1.0, 5.66, 2.0)
interior = st.floats(1e-6, 1 - 1e-6)


def pairs(min_n=2, max_n=30):
    return st.integers(min_n, max_n).flatmap(
        lambda n: st.tuples(arrays(np.float64, n, elements=interior),
                            arrays(np.float64, n, elements=interior)))


def _poly_integral(coefs, a, b):
    anti = P.polyint(coefs)
    return P.polyval(b, anti) - P.polyval(a, anti)


def exact_uniform_inner(x):
    """Independent exact construction of the uniform-weight inner kernel.

    Integrates (1{s<u} - c)(1{t<u} - c) piece by piece, c the ECDF level.
    """
    n = x.size
    edges = np.concatenate(([0.0], np.sort(x), [1.0]))
    levels = np.arange(n + 1) / n
    k = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            total = 0.0
            for a, b, c in zip(edges[:-1], edges[1:], levels):
                for lo, hi in ((a, min(b, x[i], x[j])), (max(a, min(x[i], x[j])), min(b, max(x[i], x[j]))),
                               (max(a, x[i], x[j]), b)):
                    if hi <= lo:
                        continue
                    mid = 0.5 * (lo + hi)
                    fs, ft = float(x[i] < mid) - c, float(x[j] < mid) - c
                    total += _poly_integral([fs * ft], lo, hi)
            k[i, j] = k[j, i] = total
    return k


def test_result_fields():
    u, v = np.random.default_rng(1).uniform(size=(2, 25))
    r = compute_cvm_statistic(u, v, "uniform")
    assert r.t_cent == r.t_n - r.mu_n
    t_n, mu_n, t_cent = r
    assert (t_n, mu_n, t_cent) == (r.t_n, r.mu_n, r.t_cent)


def test_input_errors():
    with pytest.raises(ValueError):
        compute_cvm_statistic(np.full(3, 0.5), np.full(4, 0.5))
    with pytest.raises(ValueError):
        compute_cvm_statistic([0.5], [0.5])
    with pytest.raises(ValueError):
        compute_cvm_statistic([0.0, 0.5], [0.2, 0.5])


def test_two_point_brute_force():
    u = v = np.array([0.25, 0.75])
    G = lambda s, t: (s * s + t * t) / 2 - max(s, t) + 1 / 3
    q = [[G(u[i], u[j]) * G(v[i], v[j]) for j in range(2)] for i in range(2)]
    r = compute_cvm_statistic(u, v, "uniform", use_inner_form=False)
    assert r.t_n == pytest.approx(sum(map(sum, q)) / 2, abs=1e-15)
    assert r.mu_n == pytest.approx((q[0][0] + q[1][1]) / 2, abs=1e-15)


@given(pairs(2, 30))
def test_matrix_path_equals_double_loop(uv):
    u, v = uv
    ku, kv = exact_uniform_inner(u), exact_uniform_inner(v)
    n = u.size
    t_direct = sum(ku[i, j] * kv[i, j] for i in range(n) for j in range(n)) / n
    mu_direct = sum(ku[i, i] * kv[i, i] for i in range(n)) / n
    r = compute_cvm_statistic(u, v, "uniform")
    assert abs(r.t_n - t_direct) < 1e-12
    assert abs(r.mu_n - mu_direct) < 1e-12


@pytest.mark.parametrize("name", BUILTINS)
@given(uv=pairs(2, 40), seed=st.integers(0, 1000))
def test_joint_permutation_invariance(name, uv, seed):
    u, v = uv
    perm = np.random.default_rng(seed).permutation(u.size)
    a = compute_cvm_statistic(u, v, name)
    b = compute_cvm_statistic(u[perm], v[perm], name)
    scale = max(1.0, abs(a.t_n), abs(a.mu_n))
    assert abs(a.t_n - b.t_n) < 1e-11 * scale and abs(a.mu_n - b.mu_n) < 1e-11 * scale


@pytest.mark.parametrize("name", BUILTINS)
@given(uv=pairs(2, 40))
def test_true_cdf_form_non_negative(name, uv):
    u, v = uv
    assert compute_cvm_statistic(u, v, name, use_inner_form=False).t_n >= -1e-10


@pytest.mark.parametrize("name", BUILTINS)
@given(uv=pairs(2, 30))
def test_mu_is_mean_of_diagonal_products(name, uv):
    u, v = uv
    gu, gv = kernel_matrix(u, name), kernel_matrix(v, name)
    expected = np.mean(np.diag(gu) * np.diag(gv))
    assert compute_cvm_statistic(u, v, name).mu_n == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_weight_scaling():
    spec = wt.quadrature_weight("uniform_doubled", lambda u: np.full_like(np.asarray(u, float), 2.0),
                                lambda j: 2.0 / (np.pi * np.asarray(j)) ** 2)
    wt.register_custom_weight(spec)
    try:
        u, v = np.random.default_rng(3).uniform(size=(2, 50))
        base = compute_cvm_statistic(u, v, "uniform")
        scaled = compute_cvm_statistic(u, v, "uniform_doubled")
        assert scaled.t_n == pytest.approx(4 * base.t_n, rel=1e-10)
        assert scaled.mu_n == pytest.approx(4 * base.mu_n, rel=1e-10)
    finally:
        wt.unregister_weight("uniform_doubled")


def test_centering_constants_iid():
    u, v = np.random.default_rng(2024).uniform(size=(2, 2000))
    assert compute_cvm_statistic(u, v, "uniform").mu_n == pytest.approx(1 / 36, abs=0.003)
    assert compute_cvm_statistic(u, v, "anderson_darling").mu_n == pytest.approx(1.0, abs=0.05)


class TestPermutation:
    def test_bounds_and_determinism(self):
        u, v = pit_transform(*generate_independent_bivariate_field(10, QUICK, 1))
        p = cvm_permutation_pvalue(u, v, "uniform", n_permutations=49, seed=5)
        assert 1 / 50 <= p <= 1.0
        assert p == cvm_permutation_pvalue(u, v, "uniform", n_permutations=49, seed=5)

    def test_schedule_independent(self):
        u, v = pit_transform(*generate_independent_bivariate_field(10, QUICK, 2))
        a = cvm_permutation_pvalue(u, v, "anderson_darling", 60, seed=9, return_details=True)
        b = cvm_permutation_pvalue(u, v, "anderson_darling", 60, seed=9, n_jobs=3, return_details=True)
        assert a[0] == b[0] and np.array_equal(a[2], b[2])

    def test_reindexing_equals_recomputation(self):
        u, v = pit_transform(*generate_independent_bivariate_field(8, QUICK, 3))
        _, observed, stats = cvm_permutation_pvalue(u, v, "uniform", 5, seed=4, return_details=True)
        assert observed == pytest.approx(compute_cvm_statistic(u, v, "uniform").t_cent, abs=1e-13)
        from spatial_cvm.seeding import derive_seed
        for b in range(5):
            perm = np.random.default_rng(derive_seed(4, b)).permutation(u.size)
            direct = compute_cvm_statistic(u, v[perm], "uniform").t_cent
            assert stats[b] == pytest.approx(direct, abs=1e-13)

    def test_invalid_count(self):
        with pytest.raises(ValueError):
            cvm_permutation_pvalue([0.2, 0.4], [0.1, 0.9], n_permutations=0)

    def test_null_rejection_rate(self):
        rejections = 0
        for s in range(200):
            u, v = pit_transform(*generate_independent_bivariate_field(10, QUICK, 1000 + s))
            rejections += cvm_permutation_pvalue(u, v, "anderson_darling", 99, seed=s) <= 0.05
        assert 0.02 <= rejections / 200 <= 0.09

    def test_power_under_strong_dependence(self):
        hits = 0
        for s in range(100):
            u, v = gaussian_copula_pair(20, QUICK, 0.5, 5000 + s)
            hits += cvm_permutation_pvalue(u, v, "anderson_darling", 199, seed=s) <= 0.01
        assert hits >= 95
