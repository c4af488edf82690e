import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from operkit.stats import mann_whitney_u, pearson, t_test


def brute_force_mw(a, b):
    """Independent enumeration oracle: U by direct pair counting over all splits."""
    a, b = list(a), list(b)
    pooled = a + b
    na = len(a)

    def u_min(sample_a, sample_b):
        ua = sum(
            1.0 if x > y else (0.5 if x == y else 0.0) for x in sample_a for y in sample_b
        )
        return min(ua, len(sample_a) * len(sample_b) - ua)

    observed = u_min(a, b)
    total = 0
    at_most = 0
    for idx in combinations(range(len(pooled)), na):
        sa = [pooled[i] for i in idx]
        sb = [pooled[i] for i in range(len(pooled)) if i not in idx]
        total += 1
        if u_min(sa, sb) <= observed + 1e-9:
            at_most += 1
    return observed, at_most / total


class TestMannWhitney:
    def test_identical_samples(self):
        res = mann_whitney_u([2.0, 2.0, 2.0], [2.0, 2.0, 2.0])
        assert res.statistic == pytest.approx(9 / 2)
        assert res.p_value == 1.0

    def test_small_separation(self):
        res = mann_whitney_u([1, 2], [3, 4])
        assert res.statistic == 0
        assert res.p_value == pytest.approx(2 / 6)

    def test_full_separation_five_five(self):
        res = mann_whitney_u([1, 2, 3, 4, 5], [6, 7, 8, 9, 10])
        assert res.statistic == 0
        assert res.p_value == pytest.approx(2 / 252)

    def test_exact_matches_enumeration_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            na = rng.integers(1, 5)
            nb = rng.integers(1, 5)
            a = rng.integers(0, 6, na).astype(float)
            b = rng.integers(0, 6, nb).astype(float)
            u_ref, p_ref = brute_force_mw(a, b)
            res = mann_whitney_u(a, b)
            assert res.statistic == pytest.approx(u_ref)
            assert res.p_value == pytest.approx(p_ref)

    def test_normal_approximation_near_exact(self):
        # sanity band: approximate p within 0.05 of enumeration at n=6+6
        rng = np.random.default_rng(3)
        for _ in range(8):
            a = rng.normal(0, 1, 6)
            b = rng.normal(0.5, 1, 6)
            exact = mann_whitney_u(a, b).p_value
            # recompute with the approximation path by inflating sizes via ties trick:
            # instead, call the internal normal branch through a 7+6 sample
            a7 = np.append(a, a.mean())
            approx = mann_whitney_u(a7, b)
            _, exact7 = brute_force_mw(a7, b)
            assert abs(approx.p_value - exact7) < 0.05
            assert 0 <= exact <= 1

    @given(
        st.lists(st.integers(0, 9), min_size=1, max_size=5),
        st.lists(st.integers(0, 9), min_size=1, max_size=5),
    )
    @settings(max_examples=60, deadline=None)
    def test_u_complement_and_symmetry(self, a, b):
        res_ab = mann_whitney_u(a, b)
        res_ba = mann_whitney_u(b, a)
        assert res_ab.statistic == res_ba.statistic
        assert res_ab.p_value == pytest.approx(res_ba.p_value)
        assert res_ab.statistic <= len(a) * len(b) / 2

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            mann_whitney_u([], [1.0])


class TestTTest:
    def test_identical_samples(self):
        res = t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert res.statistic == 0.0
        assert res.p_value == pytest.approx(1.0)

    def test_separation_limit(self):
        res = t_test([1.0, 1.001, 0.999], [100.0, 100.001, 99.999])
        assert res.p_value < 1e-10

    def test_statistic_matches_direct_formula(self):
        a = np.array([2.1, 2.5, 2.3])
        b = np.array([3.0, 3.4, 3.2])
        # independent evaluation of the pooled-variance formula
        na, nb = len(a), len(b)
        sp2 = (
            (na - 1) * np.var(a, ddof=1) + (nb - 1) * np.var(b, ddof=1)
        ) / (na + nb - 2)
        expected = (a.mean() - b.mean()) / math.sqrt(sp2 * (1 / na + 1 / nb))
        res = t_test(a, b)
        assert abs(res.statistic - expected) < 1e-10

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            t_test([1.0, 1.0], [1.0, 1.0])

    def test_minimum_sizes(self):
        with pytest.raises(ValueError):
            t_test([1.0], [1.0, 2.0])


class TestPearson:
    def test_perfect_positive(self):
        x = [1.0, 2.0, 3.0, 4.0]
        res = pearson(x, x)
        assert res.statistic == 1.0
        assert res.p_value == 0.0

    def test_perfect_negative_affine(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        res = pearson(x, -2.0 * x + 3.0)
        assert res.statistic == -1.0

    def test_matches_direct_covariance_formula(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        y = np.array([1.1, 1.9, 3.2, 3.8])
        expected = float(
            np.sum((x - x.mean()) * (y - y.mean()))
            / math.sqrt(np.sum((x - x.mean()) ** 2) * np.sum((y - y.mean()) ** 2))
        )
        res = pearson(x, y)
        assert abs(res.statistic - expected) < 1e-12

    @given(st.floats(0.1, 5.0), st.floats(-5.0, 5.0))
    @settings(max_examples=40)
    def test_invariant_under_positive_affine_maps(self, scale, shift):
        x = np.array([0.3, 1.7, 2.2, 4.1, 5.0])
        y = np.array([1.0, 0.4, 2.5, 3.9, 3.1])
        base = pearson(x, y).statistic
        assert pearson(scale * x + shift, y).statistic == pytest.approx(base, abs=1e-12)
        assert pearson(x, scale * y + shift).statistic == pytest.approx(base, abs=1e-12)
        assert pearson(-scale * x, y).statistic == pytest.approx(-base, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            pearson([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            pearson([1.0, 2.0, 3.0], [1.0, 2.0])


def test_results_are_deterministic():
    a = [0.3, 1.2, 0.8, 2.2]
    b = [1.5, 2.1, 1.9]
    first = (mann_whitney_u(a, b), t_test(a, b))
    second = (mann_whitney_u(a, b), t_test(a, b))
    assert first == second
