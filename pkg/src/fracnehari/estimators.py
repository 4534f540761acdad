"""scikit-learn style wrappers around the solvers.

The estimators hold hyperparameters only; ``fit`` runs the solver (there is
no training data, ``X`` and ``y`` are ignored) and ``predict`` evaluates the
fitted traces at points of [-1, 1].  ``get_params``/``set_params``/``clone``
come from :class:`sklearn.base.BaseEstimator`, which makes parameter scans
and copies with modified settings straightforward.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ConfigurationError
from .fibering import lambda0_estimate
from .model import ProblemParams, default_weight
from .nehari import minimize_nplus
from .pipeline import run_two_solutions
from .spectral import build_basis
from .superlinear import default_model, mp_solve

__all__ = ["NehariMinimizer", "TwoSolutionSolver", "SuperlinearSolver", "check_points"]


def check_points(X) -> np.ndarray:
    """Validate evaluation points: finite, 1-D (or one column), inside [-1, 1]."""
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected points of shape (n,) or (n, 1), got {X.shape}")
        X = X[:, 0]
    if np.any(np.abs(X) > 1):
        raise ValueError("evaluation points must lie in [-1, 1]")
    return X


def _check_positive(name, value, allow_none=False):
    if value is None and allow_none:
        return
    if not (isinstance(value, (int, float, np.integer, np.floating)) and value > 0):
        raise ConfigurationError(f"{name} must be positive, got {value!r}")


class _ConcaveConvexBase(BaseEstimator):
    def _build(self):
        _check_positive("lambda_factor", self.lambda_factor)
        _check_positive("lam", self.lam, allow_none=True)
        basis = build_basis(self.K, self.panels, self.degree)
        f = default_weight(basis.nodes) if self.weight is None else np.asarray(
            self.weight(basis.nodes), dtype=float)
        probe = ProblemParams(1.0, basis, self.p, self.q, self.alpha, self.beta, f)
        self.lambda0_ = lambda0_estimate(probe, n_samples=self.n_lambda0_samples, seed=self.seed)
        lam = self.lam if self.lam is not None else self.lambda_factor * self.lambda0_.lambda0_hat
        self.basis_ = basis
        self.params_ = probe.with_lambda(lam)
        self.lambda_ = float(lam)
        return self.params_


class NehariMinimizer(_ConcaveConvexBase):
    """Ground state on the N+ branch of the concave-convex system.

    Parameters
    ----------
    lam : float or None
        Coupling; ``None`` uses ``lambda_factor * lambda0_hat``.
    weight : callable or None
        ``f(x)`` for the concave term; defaults to ``cos(pi x)``.

    Attributes
    ----------
    solution_ : SolutionRecord
    coef_ : ndarray of shape (2, K)
    energy_ : float
    """

    def __init__(self, lam=None, lambda_factor=0.5, p=0.75, q=0.75, alpha=1.5, beta=1.5,
                 weight=None, K=128, panels=16, degree=64, n_starts=16, seed=0, tol_grad=1e-6,
                 max_iter=10_000, n_lambda0_samples=64, n_jobs=None):
        self.lam = lam
        self.lambda_factor = lambda_factor
        self.p = p
        self.q = q
        self.alpha = alpha
        self.beta = beta
        self.weight = weight
        self.K = K
        self.panels = panels
        self.degree = degree
        self.n_starts = n_starts
        self.seed = seed
        self.tol_grad = tol_grad
        self.max_iter = max_iter
        self.n_lambda0_samples = n_lambda0_samples
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        params = self._build()
        rec = minimize_nplus(params, n_starts=self.n_starts, seed=self.seed,
                             tol_grad=self.tol_grad, max_iter=self.max_iter,
                             lambda0_hat=self.lambda0_.lambda0_hat, n_jobs=self.n_jobs)
        self.solution_ = rec
        self.coef_ = rec.field
        self.energy_ = rec.energy
        self.converged_ = rec.converged
        return self

    def predict(self, X):
        """Traces ``(w1, w2)`` at the points ``X``; shape ``(n, 2)``."""
        check_is_fitted(self, "coef_")
        x = check_points(X)
        return self.basis_.evaluate(self.coef_, x).T


class TwoSolutionSolver(NehariMinimizer):
    """Both solutions: N+ minimiser and the cone mountain pass above it.

    Attributes
    ----------
    first_, second_ : SolutionRecord or None
    level_ : float or None
        Sampled level of the deformed path.
    gap_ : float or None
        Pair norm of ``second - first``.
    result_ : TwoSolutionResult
    """

    def __init__(self, lam=None, lambda_factor=0.5, p=0.75, q=0.75, alpha=1.5, beta=1.5,
                 weight=None, K=128, panels=16, degree=64, n_starts=16, seed=0, tol_grad=1e-6,
                 max_iter=10_000, n_lambda0_samples=64, n_jobs=None, path_nodes=41,
                 deform_max_steps=2000):
        super().__init__(lam, lambda_factor, p, q, alpha, beta, weight, K, panels, degree,
                         n_starts, seed, tol_grad, max_iter, n_lambda0_samples, n_jobs)
        self.path_nodes = path_nodes
        self.deform_max_steps = deform_max_steps

    def fit(self, X=None, y=None):
        params = self._build()
        res = run_two_solutions(params, n_starts=self.n_starts, seed=self.seed,
                                tol_grad=self.tol_grad, max_iter=self.max_iter,
                                path_nodes=self.path_nodes, deform_max_steps=self.deform_max_steps,
                                lambda0_hat=self.lambda0_.lambda0_hat, n_jobs=self.n_jobs)
        self.result_ = res
        self.first_ = res.first
        self.second_ = res.second
        self.level_ = res.level
        self.gap_ = res.gap
        self.coef_ = None if res.first is None else res.first.field
        return self

    def predict(self, X):
        """Columns ``(w1_first, w2_first, w1_second, w2_second)``; NaN where missing."""
        check_is_fitted(self, "result_")
        x = check_points(X)
        out = np.full((x.size, 4), np.nan)
        for j, rec in enumerate((self.first_, self.second_)):
            if rec is not None:
                out[:, 2 * j : 2 * j + 2] = self.basis_.evaluate(rec.field, x).T
        return out


class SuperlinearSolver(BaseEstimator):
    """Mountain-pass solution of the superlinear system.

    Attributes
    ----------
    solution_ : SolutionRecord
    level_ : float
    rim_ : float
        Smallest sampled energy on the small sphere (mountain-pass rim).
    """

    def __init__(self, model=None, K=128, panels=16, degree=64, seed=0, path_nodes=41,
                 tol_grad=1e-6):
        self.model = model
        self.K = K
        self.panels = panels
        self.degree = degree
        self.seed = seed
        self.path_nodes = path_nodes
        self.tol_grad = tol_grad

    def fit(self, X=None, y=None):
        basis = build_basis(self.K, self.panels, self.degree)
        model = default_model() if self.model is None else self.model
        res = mp_solve(model, basis, seed=self.seed, n_nodes=self.path_nodes, tol_grad=self.tol_grad)
        self.basis_ = basis
        self.result_ = res
        self.solution_ = res.record
        self.coef_ = res.record.field
        self.level_ = res.level
        self.rim_ = res.rim
        self.below_threshold_ = res.level < math.pi / 2
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return self.basis_.evaluate(self.coef_, check_points(X)).T
