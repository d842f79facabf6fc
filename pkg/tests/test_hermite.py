import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import hermite as npherm
from scipy.integrate import quad
from scipy.special import gamma

from rinv.exceptions import ConvergenceError
from rinv.hermite import (
    HermiteSeries,
    TruncationConfig,
    WeightSpec,
    basis_matrix,
    enumerate_basis,
    eval_basis,
    gauss_hermite_rule,
    hermite_table,
    inner_product,
    project_samples,
    random_series,
)

PI_Q = np.pi ** -0.25


def hermite_by_monomials(k, x):
    """H_k(x) = sum_m (-1)^m k! / (m! (k-2m)!) (2x)^(k-2m), normalized."""
    terms = [(-1) ** m * math.factorial(k) / (math.factorial(m) * math.factorial(k - 2 * m))
             * (2 * x) ** (k - 2 * m) for m in range(k // 2 + 1)]
    norm = math.sqrt(math.sqrt(math.pi) * 2 ** k * math.factorial(k))
    return sum(terms) / norm, sum(abs(t) for t in terms) / norm


class TestEnumerateBasis:
    def test_two_dims_degree_two(self):
        cfg = TruncationConfig(2, 2)
        assert enumerate_basis(cfg) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_constant_only(self):
        assert enumerate_basis(TruncationConfig(1, 0)) == [(0,)]

    def test_three_dims_degree_four(self):
        assert len(enumerate_basis(TruncationConfig(3, 4))) == 35

    @given(st.integers(1, 4), st.integers(0, 10))
    def test_count_and_order_against_brute_force(self, n, d):
        cfg = TruncationConfig(n, d)
        brute = [t for t in itertools.product(range(d + 1), repeat=n) if sum(t) <= d]
        brute.sort(key=lambda t: (sum(t), [-e for e in t]))
        assert enumerate_basis(cfg) == brute
        assert cfg.size == math.comb(n + d, n) == len(brute)

    def test_prefix_property(self):
        small, big = TruncationConfig(3, 3), TruncationConfig(3, 6)
        assert big.basis[: small.size] == small.basis

    @pytest.mark.parametrize("dim,deg", [(0, 1), (1, -1), (1.5, 2)])
    def test_invalid_config(self, dim, deg):
        with pytest.raises(ValueError):
            TruncationConfig(dim, deg)


class TestQuadrature:
    def test_one_point(self):
        rule = gauss_hermite_rule(1)
        assert rule.nodes == pytest.approx([0.0], abs=1e-15)
        assert rule.weights == pytest.approx([np.sqrt(np.pi)], rel=1e-14)

    def test_two_points(self):
        rule = gauss_hermite_rule(2)
        assert rule.nodes == pytest.approx([-1 / np.sqrt(2), 1 / np.sqrt(2)], rel=1e-14)
        assert rule.weights == pytest.approx([np.sqrt(np.pi) / 2] * 2, rel=1e-14)

    @pytest.mark.parametrize("q", [1, 2, 3, 7, 20, 60])
    def test_weights_sum_and_symmetry(self, q):
        rule = gauss_hermite_rule(q)
        assert abs(rule.weights.sum() - np.sqrt(np.pi)) < 1e-13
        np.testing.assert_allclose(rule.nodes, -rule.nodes[::-1], atol=1e-14)
        assert np.all(rule.weights > 0)
        assert rule.exactness == 2 * q - 1

    @pytest.mark.parametrize("q", [3, 10, 25])
    def test_matches_numpy_hermgauss(self, q):
        nodes, weights = npherm.hermgauss(q)
        rule = gauss_hermite_rule(q)
        np.testing.assert_allclose(rule.nodes, nodes, atol=1e-13)
        np.testing.assert_allclose(rule.weights, weights, rtol=1e-11, atol=1e-300)

    @pytest.mark.parametrize("q", [2, 5, 9])
    def test_even_moments_exact_through_2q_minus_1(self, q):
        rule = gauss_hermite_rule(q)
        for p in range(0, 2 * q):
            exact = 0.0 if p % 2 else gamma((p + 1) / 2)
            terms = rule.weights * rule.nodes ** p
            assert abs(terms.sum() - exact) <= 1e-13 * np.abs(terms).sum()

    def test_invalid_point_count(self):
        with pytest.raises(ValueError):
            gauss_hermite_rule(0)

    def test_eigensolve_failure_is_reported(self, monkeypatch):
        from scipy.linalg import LinAlgError

        import rinv.hermite as mod

        def boom(*args, **kwargs):
            raise LinAlgError("no convergence")

        monkeypatch.setattr(mod, "eigh_tridiagonal", boom)
        with pytest.raises(ConvergenceError):
            mod.gauss_hermite_rule(5)


class TestEvalBasis:
    def test_h0(self):
        for x in (-3.0, 0.0, 2.5):
            assert eval_basis((0,), [x]) == pytest.approx(0.7511255, abs=1e-7)

    def test_h1_at_one(self):
        assert eval_basis((1,), [1.0]) == pytest.approx(np.sqrt(2) * PI_Q, rel=1e-14)
        assert eval_basis((1,), [1.0]) == pytest.approx(1.0622, abs=1e-4)

    def test_tensor_product(self):
        assert eval_basis((1, 0), [1.0, 7.0]) == pytest.approx(0.7979, abs=1e-4)

    @pytest.mark.parametrize("x", [-2.3, -0.4, 0.0, 0.77, 1.9, 3.1])
    def test_recurrence_matches_monomial_expansion(self, x):
        table = hermite_table(x, 12)
        for k in range(13):
            value, scale = hermite_by_monomials(k, x)
            assert abs(table[k] - value) <= 1e-10 * max(scale, abs(value))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            eval_basis((1, 0), [1.0])


class TestSeries:
    def test_orthonormal_inner_products(self):
        cfg = TruncationConfig(2, 3)
        a = HermiteSeries.basis_element(cfg, (1, 1))
        b = HermiteSeries.basis_element(cfg, (0, 2))
        assert inner_product(a, a) == 1
        assert inner_product(a, b) == 0

    def test_conjugate_linear_first_slot(self):
        cfg = TruncationConfig(1, 2)
        h0 = HermiteSeries.basis_element(cfg, (0,))
        assert inner_product(1j * h0, h0) == -1j

    def test_config_mismatch(self):
        with pytest.raises(ValueError):
            inner_product(HermiteSeries.zeros(TruncationConfig(1, 2)),
                          HermiteSeries.zeros(TruncationConfig(1, 3)))

    def test_resize_pads_and_guards(self):
        cfg = TruncationConfig(2, 2)
        s = HermiteSeries.basis_element(cfg, (1, 1), 2.0)
        big = s.resize(TruncationConfig(2, 5))
        assert big.to_dict() == {(1, 1): 2.0}
        with pytest.raises(ValueError):
            s.resize(TruncationConfig(2, 1))
        assert s.resize(TruncationConfig(2, 1), truncate=True).norm2() == 0

    def test_degree(self):
        cfg = TruncationConfig(2, 4)
        assert HermiteSeries.zeros(cfg).degree == -1
        assert HermiteSeries.basis_element(cfg, (2, 1)).degree == 3

    def test_bad_index(self):
        cfg = TruncationConfig(2, 2)
        for idx in [(1,), (3, 0), (-1, 1)]:
            with pytest.raises(ValueError):
                HermiteSeries.basis_element(cfg, idx)

    def test_dict_round_trip(self, rng):
        cfg = TruncationConfig(3, 3)
        s = random_series(cfg, rng)
        back = HermiteSeries.from_dict(cfg, s.to_dict())
        np.testing.assert_array_equal(back.coeffs, s.coeffs)


class TestProjection:
    def test_constant_one(self):
        cfg = TruncationConfig(1, 6)
        s = project_samples(lambda x: np.ones(len(x)), cfg)
        assert s.coeffs[0] == pytest.approx(np.pi ** 0.25, rel=1e-13)
        assert np.abs(s.coeffs[1:]).max() < 1e-13

    def test_reproduces_basis_function(self):
        cfg = TruncationConfig(1, 6)
        s = project_samples(lambda x: hermite_table(x[:, 0], 3)[:, 3], cfg)
        expected = np.zeros(cfg.size)
        expected[3] = 1
        assert np.abs(s.coeffs - expected).max() <= 1e-12

    def test_zero(self):
        cfg = TruncationConfig(2, 4)
        assert project_samples(lambda x: np.zeros(len(x)), cfg).norm2() == 0

    @pytest.mark.parametrize("n,d", [(1, 10), (2, 6), (3, 4)])
    def test_gram_is_identity(self, n, d):
        cfg = TruncationConfig(n, d)
        rule = gauss_hermite_rule(d + 1)
        pts, w = rule.tensor(n)
        B = basis_matrix(cfg, pts)
        gram = B.T @ (w[:, None] * B)
        assert np.abs(gram - np.eye(cfg.size)).max() < 1e-12

    @pytest.mark.parametrize("n", [1, 2])
    def test_parseval(self, n, rng):
        cfg = TruncationConfig(n, 8)
        s = random_series(cfg, rng)
        pts, w = gauss_hermite_rule(9).tensor(n)
        quad_norm = np.sum(w * np.abs(s(pts)) ** 2)
        assert quad_norm == pytest.approx(s.norm2(), rel=1e-10)


class TestWeight:
    def test_invalid_lambda(self):
        for lam in (0.0, -1.0, float("nan")):
            with pytest.raises(ValueError):
                WeightSpec(lam)

    def test_default_is_unit(self):
        assert WeightSpec().is_unit and not WeightSpec(2.0).is_unit

    def test_weighted_basis_is_orthonormal(self):
        # scipy quadrature against exp(-lam (x - x0)^2), independent of the Hermite rule
        weight = WeightSpec(2.5, (0.7,))
        cfg = TruncationConfig(1, 4)
        elems = [HermiteSeries.basis_element(cfg, (k,), weight=weight) for k in range(5)]
        for j in range(5):
            for k in range(j, 5):
                val, _ = quad(lambda x: elems[j]([x])[0].real * elems[k]([x])[0].real
                              * np.exp(-2.5 * (x - 0.7) ** 2), -np.inf, np.inf)
                assert val == pytest.approx(float(j == k), abs=1e-10)

    def test_weighted_projection_of_constant(self):
        weight = WeightSpec(4.0, (1.0, -2.0))
        cfg = TruncationConfig(2, 3)
        s = project_samples(lambda x: np.ones(len(x)), cfg, weight=weight)
        assert s.coeffs[0] == pytest.approx((np.pi / 4.0) ** 0.5, rel=1e-13)
        assert s([[3.0, 5.0]])[0] == pytest.approx(1.0, rel=1e-13)
