"""scikit-learn style front ends (kept apart so the core modules import quickly)."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .spectral import build_mode_table


class SpectralTransform(TransformerMixin, BaseEstimator):
    """Sampled traces <-> mode coefficients.

    Rows of ``X`` are traces sampled on the band-limited grid of
    ``(d, max_homogeneity)``; ``transform`` returns their coefficients.
    """

    def __init__(self, d=2, max_homogeneity=8):
        self.d = d
        self.max_homogeneity = max_homogeneity

    def fit(self, X=None, y=None):
        self.table_ = build_mode_table(self.d, self.max_homogeneity)
        self.quadrature_ = self.table_.quadrature()
        self.basis_ = self.table_.evaluate(self.quadrature_.points)
        self.n_features_in_ = len(self.quadrature_)
        return self

    def transform(self, X):
        check_is_fitted(self, "table_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} samples per trace")
        return X @ (self.quadrature_.weights[:, None] * self.basis_)

    def inverse_transform(self, C):
        check_is_fitted(self, "table_")
        C = check_array(C)
        return C @ self.basis_.T

    def residual(self, X):
        """Energy of each row not captured by the table."""
        X = check_array(X)
        C = self.transform(X)
        return (X**2) @ self.quadrature_.weights - np.sum(C**2, axis=1)


class SignoriniSolver(BaseEstimator):
    """Grid solver with a fit/predict front end.

    ``fit`` takes a boundary datum (a :class:`BoundaryDatum` or its config
    dictionary) and solves the thin obstacle problem in the unit ball;
    ``predict`` interpolates the solution at points of the ball.
    """

    def __init__(self, d=2, h=1 / 64, tol=1e-10, max_iters=200000, omega="auto", nested=True):
        self.d = d
        self.h = h
        self.tol = tol
        self.max_iters = max_iters
        self.omega = omega
        self.nested = nested

    def fit(self, X, y=None):
        from .solver import detect_free_boundary, make_datum, solve

        datum = make_datum(X, d=self.d) if isinstance(X, dict) else X
        self.solution_ = solve(datum, self.d, self.h, self.tol, self.max_iters, self.omega, self.nested)
        self.free_boundary_ = detect_free_boundary(self.solution_)
        self.n_iter_ = self.solution_.info["iterations"]
        self.converged_ = self.solution_.info["converged"]
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        X = check_array(X)
        if X.shape[1] != self.d:
            raise ValueError(f"expected points of dimension {self.d}")
        return self.solution_.interpolate(X)

    def profile(self, x0=None, lam=1.5, radii=None):
        """Frequency profile of the fitted solution at a thin-plane point."""
        from .solver import frequency_profile

        check_is_fitted(self, "solution_")
        return frequency_profile(self.solution_, x0, lam, radii)
