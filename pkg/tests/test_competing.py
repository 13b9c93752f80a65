import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from spatial_cvm import competing as ct
from spatial_cvm.copula import CopulaSpec, copula_pair
from spatial_cvm.matern import MaternParams, range_fraction_to_kappa

P = MaternParams(1.0, range_fraction_to_kappa(0.05, 20, 2.0), 2.0)
COORDS = ct.lattice_coords(20)
FAST = ct.PermutationPolicy(b_max=199, b_min=99)


def rejection_rate(test, spec, seeds, **kw):
    hits = 0
    for s in seeds:
        u, v = copula_pair(20, P, spec, 10_000 + s)
        hits += test(u, v, seed=s, **kw).reject(0.05)
    return hits / len(seeds)


class TestAdaptiveLoop:
    def test_policy_validation(self):
        with pytest.raises(ValueError):
            ct.PermutationPolicy(b_max=50, b_min=99)
        with pytest.raises(ValueError):
            ct.PermutationPolicy(b_min=0)

    def test_always_exceeding_stops_at_b_min(self):
        p, used, early = ct.adaptive_permutation_loop(lambda b: 1.0, 0.0, ct.PermutationPolicy())
        assert (p, used, early) == (1.0, 99, True)

    def test_never_exceeding_stops_at_b_min(self):
        p, used, early = ct.adaptive_permutation_loop(lambda b: -1.0, 0.0, ct.PermutationPolicy())
        assert used == 99 and early and p == pytest.approx(0.01)

    def test_borderline_runs_to_b_max(self):
        # exceedance exactly every 20th permutation keeps p-hat near 0.05
        p, used, early = ct.adaptive_permutation_loop(lambda b: float(b % 20 == 0), 0.5,
                                                      ct.PermutationPolicy())
        assert used == 999 and not early
        assert p == pytest.approx(51 / 1000)

    @given(st.integers(1, 300), st.integers(1, 300), st.floats(0, 1))
    def test_p_value_convention(self, b_min, extra, q):
        policy = ct.PermutationPolicy(b_max=b_min + extra, b_min=b_min)
        rng = np.random.default_rng(0)
        draws = rng.uniform(size=policy.b_max)
        p, used, _ = ct.adaptive_permutation_loop(lambda b: draws[b], 1 - q, policy)
        count = int(np.sum(draws[:used] >= 1 - q))
        assert p == (count + 1) / (used + 1)
        assert 0 < p <= 1 and b_min <= used <= policy.b_max

    @pytest.mark.parametrize("q", [0.0, 0.005, 0.2, 0.5, 0.9])
    def test_early_stop_keeps_decision(self, q):
        policy = ct.PermutationPolicy()
        full = ct.PermutationPolicy(b_max=999, b_min=999)
        for seed in range(25):
            draws = np.random.default_rng(seed).uniform(size=999)
            fn = lambda b: draws[b]
            p_early, _, _ = ct.adaptive_permutation_loop(fn, 1 - q, policy)
            p_full, _, _ = ct.adaptive_permutation_loop(fn, 1 - q, full)
            assert (p_early <= 0.05) == (p_full <= 0.05)


class TestMantel:
    def test_matches_pearson_of_distances(self):
        u, v = copula_pair(8, P, CopulaSpec("gaussian", rho=0.3), 1)
        coords = ct.lattice_coords(8)
        iu, ju = np.triu_indices(64, 1)
        ds = np.linalg.norm(coords[iu] - coords[ju], axis=1)
        expected = np.corrcoef(ds, np.abs(v[iu] - v[ju]))[0, 1]
        out = ct.mantel_test(u, v, coords, ct.PermutationPolicy(b_max=20, b_min=10))
        assert out.statistic == pytest.approx(expected, abs=1e-12)

    def test_self_correlation(self):
        coords = np.column_stack([np.arange(30.0), np.zeros(30)])
        v = np.arange(30) / 30
        out = ct.mantel_test(v, v, coords, ct.PermutationPolicy(b_max=50, b_min=20))
        assert out.statistic == pytest.approx(1.0, abs=1e-12)
        # no permuted value reaches 1; p-hat = 1/(b+1) leaves the band around 0.05 at b = 33
        assert out.permutations == 33 and out.p_value == pytest.approx(1 / 34)

    def test_constant_v_degenerate(self):
        out = ct.mantel_test(np.linspace(0.1, 0.9, 9), np.full(9, 0.4), ct.lattice_coords(3))
        assert out.degenerate and out.p_value == 1.0

    def test_distance_preserving_relabelling(self):
        u, v = copula_pair(10, P, CopulaSpec("gaussian", rho=0.2), 4)
        coords = ct.lattice_coords(10, unit=False)
        mirror = coords.copy()
        mirror[:, 1] = 9 - mirror[:, 1]
        policy = ct.PermutationPolicy(b_max=30, b_min=10)
        a = ct.mantel_test(u, v, coords, policy).statistic
        # mirror[i] is a lattice point, so the pairwise distance multiset is preserved
        order = np.lexsort((mirror[:, 1], mirror[:, 0]))
        assert np.array_equal(mirror[order], coords)
        b = ct.mantel_test(u, v, mirror, policy).statistic
        iu, ju = np.triu_indices(100, 1)
        d1 = np.linalg.norm(coords[iu] - coords[ju], axis=1)
        d2 = np.linalg.norm(mirror[iu] - mirror[ju], axis=1)
        assert np.allclose(d1, d2)
        assert a == pytest.approx(b, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            ct.mantel_test([0.1, 0.2], [0.1, 0.2], np.zeros((2, 2)))
        with pytest.raises(ValueError):
            ct.mantel_test(np.ones(4), np.linspace(0, 1, 4), np.zeros((5, 2)))

    def test_deterministic(self):
        u, v = copula_pair(10, P, CopulaSpec("gaussian", rho=0.3), 2)
        a = ct.mantel_test(u, v, ct.lattice_coords(10), seed=3)
        assert a == ct.mantel_test(u, v, ct.lattice_coords(10), seed=3)

    def test_rate_under_gaussian_alternative(self):
        rate = rejection_rate(lambda u, v, seed: ct.mantel_test(u, v, COORDS, seed=seed),
                              CopulaSpec("gaussian", rho=0.3), range(200))
        assert 0.02 <= rate <= 0.12


class TestCrossK:
    def test_estimator_against_brute_force(self):
        rng = np.random.default_rng(0)
        coords = rng.uniform(size=(50, 2))
        labels = rng.uniform(size=50) < 0.4
        radii = np.array([0.0, 0.05, 0.1, 0.2])
        k = ct.cross_k_function(labels, ct._cross_pairs(coords, radii), radii, area=1.0)
        d = np.linalg.norm(coords[:, None] - coords[None, :], axis=2)
        cross = labels[:, None] & ~labels[None, :]
        expected = [np.sum(cross & (d <= r)) / (labels.sum() * (~labels).sum()) for r in radii]
        np.testing.assert_allclose(k, expected)
        assert k[0] == 0.0

    def test_default_radii(self):
        r = ct.default_radii()
        assert r.size == 20 and r[-1] == pytest.approx(0.25) and np.all(np.diff(r) > 0)

    def test_degenerate_split(self):
        out = ct.cross_k_test(np.full(16, 0.3), np.linspace(0.1, 0.9, 16), ct.lattice_coords(4))
        assert out.degenerate and out.p_value == 1.0

    def test_too_small(self):
        with pytest.raises(ValueError):
            ct.cross_k_test([0.1, 0.2, 0.3], [0.1, 0.2, 0.3], np.zeros((3, 2)))

    def test_exchangeable_labels_rate(self):
        hits = 0
        for s in range(200):
            u = np.random.default_rng(s).uniform(size=400)
            hits += ct.cross_k_test(u, u, COORDS, policy=FAST, seed=s).reject(0.05)
        assert 0.01 <= hits / 200 <= 0.10

    def test_rate_under_t_alternative(self):
        rate = rejection_rate(lambda u, v, seed: ct.cross_k_test(u, v, COORDS, seed=seed),
                              CopulaSpec("t", tau=0.3), range(200))
        assert 0.06 <= rate <= 0.18


class TestDistanceCovariance:
    def test_constant_v(self):
        out = ct.distance_covariance_test(np.linspace(0.1, 0.9, 10), np.full(10, 0.5))
        assert out.statistic == 0.0 and out.p_value == 1.0

    def test_identity_case(self):
        u = np.random.default_rng(1).uniform(size=30)
        a = ct.double_centered_distances(u)
        assert ct.dcov_statistic(u, u) == pytest.approx(np.sum(a * a) / 900)
        out = ct.distance_covariance_test(u, u, ct.PermutationPolicy(b_max=50, b_min=20))
        assert out.statistic == pytest.approx(np.sum(a * a) / 900) and out.statistic > 0

    def test_against_moment_formula(self):
        rng = np.random.default_rng(2)
        x, y = rng.uniform(size=(2, 40))
        dx, dy = np.abs(x[:, None] - x[None]), np.abs(y[:, None] - y[None])
        s1 = np.mean(dx * dy)
        s2 = dx.mean() * dy.mean()
        s3 = np.mean(dx.mean(axis=1) * dy.mean(axis=1))
        assert ct.dcov_statistic(x, y) == pytest.approx(s1 + s2 - 2 * s3, rel=1e-12)

    @given(arrays(np.float64, 12, elements=st.floats(0, 1)),
           arrays(np.float64, 12, elements=st.floats(0, 1)),
           st.floats(-5, 5), st.floats(-5, 5))
    def test_translation_invariant(self, u, v, a, b):
        assert ct.dcov_statistic(u + a, v + b) == pytest.approx(ct.dcov_statistic(u, v), abs=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            ct.distance_covariance_test([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])
        with pytest.raises(ValueError):
            ct.distance_covariance_test(np.ones(5) * 0.2, np.ones(6) * 0.2)

    @pytest.mark.xfail(strict=True, reason="reference rate comes from a power table that disagrees "
                       "with the main power table at the same settings; observed rate is about 0.95")
    def test_rate_under_gaussian_alternative(self):
        rate = rejection_rate(lambda u, v, seed: ct.distance_covariance_test(u, v, FAST, seed=seed),
                              CopulaSpec("gaussian", rho=0.2), range(200))
        assert rate == pytest.approx(0.814, abs=0.10)


def test_outcome_reject():
    out = ct.TestOutcome(1.0, 0.05, 99, True)
    assert out.reject(0.05) and not out.reject(0.01)
