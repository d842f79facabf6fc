"""scikit-learn style wrapper around the chained minimal-norm right inverse."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .factorization import PolynomialSpec, factor_operator
from .hermite import HermiteSeries
from .solver import (
    DEFAULT_RANK_TOL,
    ChainSolver,
    SolveConfig,
    SolveReport,
    _rescale_report,
)
from .validation import check_coefficients, check_polynomial, check_series, check_weight


class RightInverse(TransformerMixin, BaseEstimator):
    """
    Bounded right inverse Q of P(Lap) = Lap^m + a_{m-1} Lap^{m-1} + ... + a_0.

    Samples are coefficient vectors over the orthonormal Hermite basis of the
    weight exp(-lam |x - center|^2), truncated at ``trial_degree`` (graded lex
    order, see ``TruncationConfig``).  ``transform`` maps right-hand sides f to
    minimal-norm solutions u = Q f, and ``inverse_transform`` applies P(Lap)
    itself, so ``inverse_transform(transform(F))`` reproduces F on every
    coefficient of degree <= ``test_degree``.

    ``fit`` ignores its data: Q depends only on the operator and the truncation.

    Parameters
    ----------
    coefficients : sequence of complex
        a_0, ..., a_{m-1}; the leading coefficient is 1.
    dim : int
        Spatial dimension n.
    test_degree : int
        Degree M up to which the weak equation is imposed.
    trial_degree : int or None
        Degree N of the solution space; defaults to M + 2m + 4.
    rank_tol : float
        Singular values below ``rank_tol`` times the largest are discarded.
    lam, center : weight parameters; defaults give exp(-|x|^2).
    """

    def __init__(self, coefficients=(0.0,), dim=1, test_degree=8, trial_degree=None,
                 rank_tol=DEFAULT_RANK_TOL, lam=1.0, center=None):
        self.coefficients = coefficients
        self.dim = dim
        self.test_degree = test_degree
        self.trial_degree = trial_degree
        self.rank_tol = rank_tol
        self.lam = lam
        self.center = center

    def fit(self, X=None, y=None):
        spec = PolynomialSpec(check_polynomial(self.coefficients))
        self.weight_ = check_weight(self.lam, self.center, self.dim)
        self.solve_config_ = SolveConfig(self.dim, self.test_degree, self.trial_degree,
                                         self.rank_tol)
        self.polynomial_ = spec
        self.factored_ = factor_operator(spec.scaled(self.weight_.lam))
        self.chain_ = ChainSolver(self.factored_.shifts, self.solve_config_)
        self.shifts_ = tuple(self.weight_.lam * s for s in self.factored_.shifts)
        self.config_ = self.chain_.trial
        self.n_features_in_ = self.config_.size
        self.bound_ = self.chain_.bound * self.weight_.lam ** (-2 * spec.degree)
        if X is not None:
            check_coefficients(X, self.n_features_in_)
        return self

    @property
    def degree_(self) -> int:
        check_is_fitted(self, "chain_")
        return self.polynomial_.degree

    def transform(self, X):
        check_is_fitted(self, "chain_")
        X = check_coefficients(X, self.n_features_in_)
        U = self.chain_.apply(X.T).T
        return U * self.weight_.lam ** (-self.degree_)

    def inverse_transform(self, X):
        """Apply P(Lap) in coefficient space (the forward operator)."""
        check_is_fitted(self, "chain_")
        X = check_coefficients(X, self.n_features_in_)
        # P(Lap_x) = lam^m P~(Lap_y)
        return self.chain_.forward(X.T).T * self.weight_.lam ** self.degree_

    def solve(self, f) -> SolveReport:
        """Solve for a single right-hand side and return the full stage report."""
        check_is_fitted(self, "chain_")
        f = check_series(f, self.config_, self.weight_)
        unit = HermiteSeries(f.config, f.coeffs)
        return _rescale_report(self.chain_.solve(unit), self.weight_.lam, self.weight_)

    def empty_series(self) -> HermiteSeries:
        check_is_fitted(self, "chain_")
        return HermiteSeries.zeros(self.config_, self.weight_)


def ratios(estimator: RightInverse, X) -> np.ndarray:
    """||Q f||^2 / ||f||^2 per sample (0 for zero rows)."""
    X = check_coefficients(X, estimator.n_features_in_)
    U = estimator.transform(X)
    fn = np.sum(np.abs(X) ** 2, axis=1)
    un = np.sum(np.abs(U) ** 2, axis=1)
    return np.divide(un, fn, out=np.zeros_like(un), where=fn > 0)
