"""Multivariate-normal orthant probabilities against closed forms.

For exchangeable correlation 1/2 the orthant probability at zero is
1/(d+1); for a bivariate pair it is 1/4 + asin(rho)/(2 pi). Both are
classical identities, so no simulation oracle is needed here.
"""
import numpy as np
import pytest
from scipy.special import ndtr

from nphkit import MvnFailureError, mvn_lower_orthant

TOL = 5e-4  # advertised accuracy of the lattice integrator


def equicorr(d, rho):
    c = np.full((d, d), rho)
    np.fill_diagonal(c, 1.0)
    return c


class TestClosedForms:
    def test_univariate_is_exact(self):
        for b in (-2.1, 0.0, 0.7, 3.3):
            assert mvn_lower_orthant(np.array([b]), np.eye(1)) == pytest.approx(
                float(ndtr(b)), abs=1e-14
            )

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_exchangeable_half_at_zero(self, d):
        p = mvn_lower_orthant(np.zeros(d), equicorr(d, 0.5))
        assert p == pytest.approx(1.0 / (d + 1), abs=TOL)

    @pytest.mark.parametrize("rho", [-0.5, 0.0, 0.3, 0.9])
    def test_bivariate_at_zero(self, rho):
        expected = 0.25 + np.arcsin(rho) / (2 * np.pi)
        p = mvn_lower_orthant(np.zeros(2), equicorr(2, rho))
        assert p == pytest.approx(expected, abs=TOL)

    def test_independence_factorizes(self):
        b = np.array([0.5, -0.3, 1.1, 0.0])
        p = mvn_lower_orthant(b, np.eye(4))
        assert p == pytest.approx(float(np.prod(ndtr(b))), abs=TOL)

    def test_perfect_correlation_collapses(self):
        # rho = 1 duplicates a coordinate; the probability is the
        # univariate tail at the smaller bound.
        b = np.array([0.8, 0.2])
        p = mvn_lower_orthant(b, equicorr(2, 1.0))
        assert p == pytest.approx(float(ndtr(0.2)), abs=TOL)

    def test_four_dim_equicorrelated_at_quantile(self):
        # P(all <= 1) for rho = 0.5 equals E[Phi((1 - sqrt(0.5) Z)/sqrt(0.5))^4],
        # computed here by 200-point Gauss-Hermite quadrature.
        p = mvn_lower_orthant(np.full(4, 1.0), equicorr(4, 0.5))
        assert p == pytest.approx(0.6266989588958457, abs=TOL)


class TestContract:
    def test_deterministic(self):
        b = np.array([0.4, 0.1, -0.2])
        c = equicorr(3, 0.45)
        assert mvn_lower_orthant(b, c) == mvn_lower_orthant(b, c)

    def test_result_in_unit_interval(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            a = rng.standard_normal((4, 4))
            cov = a @ a.T
            s = np.sqrt(np.diag(cov))
            corr = cov / np.outer(s, s)
            p = mvn_lower_orthant(rng.standard_normal(4), corr)
            assert 0.0 <= p <= 1.0

    def test_monotone_in_bounds(self):
        c = equicorr(3, 0.4)
        lo = mvn_lower_orthant(np.array([0.0, 0.0, 0.0]), c)
        hi = mvn_lower_orthant(np.array([0.5, 0.0, 0.0]), c)
        assert hi > lo

    def test_validation(self):
        with pytest.raises(MvnFailureError):
            mvn_lower_orthant(np.array([0.0, np.nan]), np.eye(2))
        bad_diag = np.array([[1.0, 0.2], [0.2, 0.9]])
        with pytest.raises(MvnFailureError):
            mvn_lower_orthant(np.zeros(2), bad_diag)
        asym = np.array([[1.0, 0.2], [0.3, 1.0]])
        with pytest.raises(MvnFailureError):
            mvn_lower_orthant(np.zeros(2), asym)
        with pytest.raises(MvnFailureError):
            mvn_lower_orthant(np.zeros(3), np.eye(2))
