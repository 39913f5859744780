"""Scikit-learn style estimators wrapping the boosting path machinery."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .boosting import BoostConfig, boost_ls_cross_section, run_path
from .design import build_lagged_design, grouped_to_lag_matrices, regroup_by_variable
from .exceptions import DataError
from .selection import aicc
from .validation import as_float_matrix


class BoostedVAR(BaseEstimator):
    """Vector autoregression fit by greedy least-squares boosting.

    Parameters
    ----------
    variant : {"group", "lag"}
        Select a variable with all its lags per step, or one lag column.
    p : int
        Lag order.
    nu : float
        Learning rate in (0, 1].
    k_stop : int
        Boosting step budget.
    stop : {"aicc", "last"}
        Stopping rule applied after the path is run.
    compute_inference : bool
        Maintain per-step standard errors and p-values ("aicc" needs it).
    demean : bool
        Center columns before fitting; means are restored in predictions.

    Attributes
    ----------
    coef_ : ndarray of shape (p*d, d)
        Coefficient stack at the chosen step, grouped by variable: row
        j*p + (s-1) holds variable j at lag s, one column per equation.
    lag_matrices_ : list of ndarray
        The p d x d lag coefficient matrices at the chosen step.
    k_ : int
        Chosen stopping step.
    path_ : BoostPath
        The full recorded path.
    pvalues_ : ndarray of shape (p*d, d)
        P-values at the chosen step (NaN where never estimated); only when
        inference was computed.
    """

    def __init__(self, variant="group", p=2, nu=0.1, k_stop=500, stop="aicc",
                 compute_inference=True, demean=True):
        self.variant = variant
        self.p = p
        self.nu = nu
        self.k_stop = k_stop
        self.stop = stop
        self.compute_inference = compute_inference
        self.demean = demean

    def fit(self, X, y=None):
        X = as_float_matrix(X, "X")
        if self.stop not in ("aicc", "last"):
            raise DataError(f"unknown stopping rule {self.stop!r}")
        if self.stop == "aicc" and not self.compute_inference:
            raise DataError("stop='aicc' needs compute_inference=True")
        config = BoostConfig(variant=self.variant, nu=self.nu, k_stop=self.k_stop,
                             compute_inference=self.compute_inference)
        path = run_path(X, self.p, config, demean=self.demean)
        self.path_ = path
        self.k_ = (aicc(path).chosen_k if self.stop == "aicc" else path.n_steps)
        self.coef_ = path.coefficients_at(self.k_)
        self.lag_matrices_ = grouped_to_lag_matrices(self.coef_, path.p, path.d)
        self.column_means_ = (np.zeros(path.d) if path.means is None
                              else path.means.copy())
        self.intercept_ = (np.eye(path.d) - sum(self.lag_matrices_)) @ self.column_means_
        if self.compute_inference:
            self.inference_ = path.inference_at(self.k_)
            self.pvalues_ = path.pvalues_at(self.k_)
        return self

    def predict(self, X):
        """One-step-ahead predictions for rows p..T-1 of a panel.

        Returns an array of shape (T - p, d) aligned with the panel rows
        that have a full lag window.
        """
        if not hasattr(self, "coef_"):
            raise DataError("estimator is not fitted")
        X = as_float_matrix(X, "X")
        centered = X - self.column_means_
        lagged = build_lagged_design(centered, self.path_.p, demean=False)
        grouped = regroup_by_variable(lagged)
        return grouped.design @ self.coef_ + self.column_means_


class BoostedLinearRegression(BaseEstimator, RegressorMixin):
    """Componentwise least-squares boosting for a single-response regression.

    Exposes the estimate, standard error and p-value of every selected
    coefficient at the chosen step.
    """

    def __init__(self, nu=0.1, k_stop=2000, stop="last", compute_inference=True,
                 fit_intercept=True):
        self.nu = nu
        self.k_stop = k_stop
        self.stop = stop
        self.compute_inference = compute_inference
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        X = as_float_matrix(X, "X")
        y = np.asarray(y, dtype=float).reshape(-1, 1)
        if X.shape[0] != y.shape[0]:
            raise DataError("X and y row counts differ")
        if self.stop not in ("aicc", "last"):
            raise DataError(f"unknown stopping rule {self.stop!r}")
        if self.stop == "aicc" and not self.compute_inference:
            raise DataError("stop='aicc' needs compute_inference=True")
        x_mean = X.mean(axis=0) if self.fit_intercept else np.zeros(X.shape[1])
        y_mean = float(y.mean()) if self.fit_intercept else 0.0
        config = BoostConfig(variant="cross", nu=self.nu, k_stop=self.k_stop,
                             compute_inference=self.compute_inference)
        path = boost_ls_cross_section(X - x_mean, y - y_mean, config)
        self.path_ = path
        self.k_ = (aicc(path).chosen_k if self.stop == "aicc" else path.n_steps)
        self.coef_ = path.coefficients_at(self.k_).ravel()
        self.intercept_ = y_mean - float(x_mean @ self.coef_)
        if self.compute_inference:
            self.inference_ = path.inference_at(self.k_)
            n = path.n_coef_rows
            self.se_ = self.inference_.se_matrix(n, 1).ravel()
            self.pvalues_ = self.inference_.pvalue_matrix(n, 1).ravel()
        return self

    def predict(self, X):
        if not hasattr(self, "coef_"):
            raise DataError("estimator is not fitted")
        X = as_float_matrix(X, "X")
        return X @ self.coef_ + self.intercept_
