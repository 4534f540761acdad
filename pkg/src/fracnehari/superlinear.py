"""Superlinear problem with critical exponential growth.

Energy of a pair ``w`` with traces ``u, v``::

    I(w) = 1/2 ||w||**2 - int H(u, v)

for a potential ``H`` vanishing outside the open positive quadrant.  The
default potential is ``(s**4 + t**4) exp(s**2 + t**2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import eigh

from .errors import LevelViolationError, NontrivialityError
from .model import grad_norm
from .mountain_pass import build_endpoint, deform, initial_path, refine_to_critical
from .nehari import Branch, SolutionRecord
from .spectral import SpectralBasis, build_basis, pair_norm, pair_norm_sq

__all__ = [
    "SuperlinearModel",
    "SuperlinearProblem",
    "HypothesisReport",
    "default_model",
    "quadratic_model",
    "scaled_quadratic_model",
    "lambda1",
    "hypothesis_check",
    "geometry_probe",
    "weak_residual",
    "mp_solve",
    "MPResult",
]

OVERFLOW_EXPONENT = 700.0


def _positive(s, t):
    return (s > 0) & (t > 0)


@dataclass(frozen=True, eq=False)
class SuperlinearModel:
    """Potential ``H`` with partials ``h1, h2`` and optional second partials.

    ``hess(s, t)`` returns ``(H_ss, H_st, H_tt)``; when absent the
    solver differentiates ``h1, h2`` numerically.  ``s0, t0, M1, M2`` are
    witnesses for the domination hypothesis (filled in by
    :func:`hypothesis_check` when ``None``).
    """

    H: Callable
    h1: Callable
    h2: Callable
    mu: float
    lambda1: float = math.pi
    hess: Callable | None = None
    name: str = "custom"
    s0: float = 1.0
    t0: float = 1.0
    M1: float | None = None
    M2: float | None = None

    def hessian_entries(self, s, t, h=1e-6):
        if self.hess is not None:
            return self.hess(s, t)
        hs = h * np.maximum(1.0, np.abs(s))
        ht = h * np.maximum(1.0, np.abs(t))
        Hss = (self.h1(s + hs, t) - self.h1(s - hs, t)) / (2 * hs)
        Htt = (self.h2(s, t + ht) - self.h2(s, t - ht)) / (2 * ht)
        Hst = (self.h1(s, t + ht) - self.h1(s, t - ht)) / (2 * ht)
        return Hss, Hst, Htt


def _exp_quad(s, t):
    e = s * s + t * t
    if np.size(e) and np.max(e) > OVERFLOW_EXPONENT:
        from .errors import DivergedIterateError

        raise DivergedIterateError("exponent overflow in H")
    return np.exp(e)


def default_model(lambda1_value: float = math.pi) -> SuperlinearModel:
    """``H = (s**4 + t**4) exp(s**2 + t**2)`` on the positive quadrant, ``mu = 4``."""

    def H(s, t):
        return np.where(_positive(s, t), (s**4 + t**4) * _exp_quad(s, t), 0.0)

    def h1(s, t):
        P = s**4 + t**4
        return np.where(_positive(s, t), (4 * s**3 + 2 * s * P) * _exp_quad(s, t), 0.0)

    def h2(s, t):
        P = s**4 + t**4
        return np.where(_positive(s, t), (4 * t**3 + 2 * t * P) * _exp_quad(s, t), 0.0)

    def hess(s, t):
        P = s**4 + t**4
        e = _exp_quad(s, t)
        pos = _positive(s, t)
        Hss = (12 * s**2 + 2 * P + 16 * s**4 + 4 * s**2 * P) * e
        Htt = (12 * t**2 + 2 * P + 16 * t**4 + 4 * t**2 * P) * e
        Hst = (8 * s * t**3 + 8 * s**3 * t + 4 * s * t * P) * e
        return np.where(pos, Hss, 0.0), np.where(pos, Hst, 0.0), np.where(pos, Htt, 0.0)

    return SuperlinearModel(H, h1, h2, mu=4.0, lambda1=lambda1_value, hess=hess, name="default")


def scaled_quadratic_model(c: float = 1.0, lambda1_value: float = math.pi) -> SuperlinearModel:
    """``H = c (s**2 + t**2)`` on the positive quadrant (AR constant 2)."""

    def H(s, t):
        return np.where(_positive(s, t), c * (s * s + t * t), 0.0)

    def h1(s, t):
        return np.where(_positive(s, t), 2 * c * s, 0.0)

    def h2(s, t):
        return np.where(_positive(s, t), 2 * c * t, 0.0)

    def hess(s, t):
        pos = _positive(s, t)
        return np.where(pos, 2 * c, 0.0), np.zeros_like(s * t), np.where(pos, 2 * c, 0.0)

    return SuperlinearModel(H, h1, h2, mu=2.0, lambda1=lambda1_value, hess=hess,
                            name=f"quadratic(c={c:g})")


def quadratic_model(lambda1_value: float = math.pi) -> SuperlinearModel:
    return scaled_quadratic_model(1.0, lambda1_value)


def lambda1(basis: SpectralBasis, generic: bool = False) -> float:
    """Twice the smallest Rayleigh quotient ``||w||**2 / |w|_{L2}**2`` of one trace.

    The sine basis diagonalises both forms, giving ``2 sigma_1 = pi``.  With
    ``generic=True`` the generalised eigenproblem against the discrete Gram
    matrix is solved instead.
    """
    if not generic:
        return float(2 * np.min(basis.sigma))
    A = np.diag(basis.sigma)
    M = basis.gram_matrix()
    return float(2 * eigh(A, M, eigvals_only=True, subset_by_index=[0, 0])[0])


class SuperlinearProblem:
    """Functional interface (energy, gradient, hessian) for a model on a basis."""

    def __init__(self, model: SuperlinearModel, basis: SpectralBasis):
        self.model = model
        self.basis = basis

    def traces(self, w):
        return self.basis.synthesize(w)

    def energy(self, w) -> float:
        u, v = self.traces(w)
        return float(0.5 * pair_norm_sq(w, self.basis) - self.basis.grid.integrate(self.model.H(u, v)))

    def gradient(self, w) -> np.ndarray:
        u, v = self.traces(w)
        r = np.stack([self.model.h1(u, v), self.model.h2(u, v)])
        return self.basis.sigma * np.asarray(w) - self.basis.analyze(r)

    def hessian(self, w) -> np.ndarray:
        u, v = self.traces(w)
        Hss, Hst, Htt = self.model.hessian_entries(u, v)
        E = self.basis.trace_matrix
        Ew = E * self.basis.weights
        K = self.basis.K
        out = np.zeros((2 * K, 2 * K))
        out[:K, :K] = -(Ew * Hss) @ E.T
        out[K:, K:] = -(Ew * Htt) @ E.T
        out[:K, K:] = -(Ew * Hst) @ E.T
        out[K:, :K] = out[:K, K:].T
        out[np.diag_indices(2 * K)] += np.concatenate([self.basis.sigma, self.basis.sigma])
        return out

    def ar_gap(self, w) -> float:
        """``int (h1 u + h2 v) - mu int H``; nonnegative under the AR condition."""
        u, v = self.traces(w)
        m = self.model
        q = self.basis.grid.integrate
        return float(q(m.h1(u, v) * u + m.h2(u, v) * v) - m.mu * q(m.H(u, v)))


# hypotheses -------------------------------------------------------------------


@dataclass
class HypothesisReport:
    h1: bool
    h2: bool
    h3: bool
    h4: bool
    h5: bool
    details: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return self.h1 and self.h2 and self.h3 and self.h4 and self.h5

    @property
    def failed(self) -> list:
        return [n for n in ("h1", "h2", "h3", "h4", "h5") if not getattr(self, n)]


def _rays(n=8):
    th = 0.5 * np.pi * (np.arange(n) + 0.5) / n
    return np.cos(th), np.sin(th)


def hypothesis_check(model: SuperlinearModel, n_grid: int = 100, n_rays: int = 8,
                     eps: float = 0.1, r_growth: float = 20.0, r_blowup: float = 10.0,
                     blowup_threshold: float = 1e6, r_small: float = 1e-3,
                     fd_rel: float = 1e-6) -> HypothesisReport:
    """Finite surrogates for the five structural hypotheses.

    * h1: partials match finite differences of ``H``, are positive on the
      open quadrant and vanish off it, and ``h_i exp(-(1+eps) R**2)`` decays
      along ``n_rays`` rays up to ``R = r_growth``.
    * h2: ``0 <= mu H <= s h1 + t h2`` on an ``n_grid x n_grid`` grid.
    * h3: ``H <= M (h1 + h2)`` for ``s, t > 1`` with a finite ``M`` found on
      the grid.
    * h4: ``(s h1 + t h2) exp(-R**2) > blowup_threshold`` at ``R = r_blowup``
      on every ray.
    * h5: ``max 2H / (s**2 + t**2)`` at radius ``r_small`` is below
      ``lambda1``.
    """
    d = {}
    cs, sn = _rays(n_rays)
    g = np.geomspace(1e-2, 4.0, n_grid)
    S, T = np.meshgrid(g, g)

    # h1
    hs = fd_rel * S
    fd1 = (model.H(S + hs, T) - model.H(S - hs, T)) / (2 * hs)
    fd2 = (model.H(S, T + hs) - model.H(S, T - hs)) / (2 * hs)
    a1, a2 = model.h1(S, T), model.h2(S, T)
    scale = np.maximum(np.abs(a1) + np.abs(a2), 1e-300)
    fd_err = float(np.max((np.abs(fd1 - a1) + np.abs(fd2 - a2)) / scale))
    positive = bool(np.all(a1 > 0) and np.all(a2 > 0))
    off = np.array([-1.0, -0.5, 0.0])
    zero_off = all(
        np.all(model.h1(x, y) == 0) and np.all(model.h2(x, y) == 0)
        for x, y in ((off, off), (off, np.ones(3)), (np.ones(3), off))
    )
    R = np.linspace(r_growth / 2, r_growth, 64)
    decay_ok = True
    for c, s in zip(cs, sn):
        x, y = R * c, R * s
        damp = np.exp(-(1 + eps) * R * R)
        for h in (model.h1, model.h2):
            val = h(x, y) * damp
            decay_ok &= bool(val[-1] < 1e-3 * max(val[0], 1e-300) or val[-1] < 1e-12)
    d.update(h1_fd_rel_err=fd_err, h1_positive=positive, h1_zero_off_quadrant=bool(zero_off),
             h1_decay=decay_ok)
    ok1 = fd_err < 1e-5 and positive and zero_off and decay_ok

    # h2
    Hv = model.H(S, T)
    defect = S * a1 + T * a2 - model.mu * Hv
    d["h2_min_defect_rel"] = float(np.min(defect / np.maximum(S * a1 + T * a2, 1e-300)))
    ok2 = model.mu > 2 and bool(np.all(Hv >= 0)) and bool(np.all(defect >= -1e-12 * np.abs(S * a1 + T * a2)))

    # h3
    g3 = np.linspace(model.s0, 2 * model.s0 + 9, n_grid)[1:]
    S3, T3 = np.meshgrid(g3, g3 * model.t0 / model.s0)
    den = model.h1(S3, T3) + model.h2(S3, T3)
    ratio = model.H(S3, T3) / den
    M = float(np.max(ratio)) if np.all(den > 0) else math.inf
    d["h3_M"] = M
    ok3 = math.isfinite(M)

    # h4
    vals = []
    for c, s in zip(cs, sn):
        x, y = r_blowup * c, r_blowup * s
        vals.append(float((x * model.h1(x, y) + y * model.h2(x, y)) * math.exp(-r_blowup**2)))
    d["h4_min_value"] = min(vals)
    ok4 = min(vals) > blowup_threshold

    # h5
    x, y = r_small * cs, r_small * sn
    lim = float(np.max(2 * model.H(x, y) / (x * x + y * y)))
    d["h5_limit"] = lim
    d["lambda1"] = model.lambda1
    ok5 = lim < model.lambda1

    return HypothesisReport(ok1, ok2, ok3, ok4, ok5, d)


# probes -------------------------------------------------------------------------


def geometry_probe(problem: SuperlinearProblem, rho: float = 0.1, n_samples: int = 64,
                   seed: int = 0) -> float:
    """Minimum of ``I`` over ``n_samples`` random nonnegative pairs of norm ``rho``."""
    basis = problem.basis
    k = np.arange(1, basis.K + 1)
    best = math.inf
    for i in range(n_samples):
        rng = np.random.default_rng([seed, i])
        w = basis.analyze(np.abs(basis.synthesize(rng.standard_normal((2, basis.K)) / k)))
        w *= rho / pair_norm(w, basis)
        best = min(best, problem.energy(w))
    return best


def weak_residual(problem: SuperlinearProblem, w, n_tests: int = 20, seed: int = 0) -> float:
    """Largest ``|<I'(w), phi>|`` over random test pairs of unit norm."""
    basis = problem.basis
    g = problem.gradient(w)
    k = np.arange(1, basis.K + 1)
    worst = 0.0
    for i in range(n_tests):
        rng = np.random.default_rng([seed, i])
        phi = rng.standard_normal((2, basis.K)) / k
        phi /= pair_norm(phi, basis)
        worst = max(worst, abs(float(np.sum(g * phi))))
    return worst


@dataclass
class MPResult:
    record: SolutionRecord
    level: float
    rim: float
    weak_residual: float
    path_history: list = field(repr=False, default_factory=list)
    hypotheses: HypothesisReport | None = None

    def summary(self) -> dict:
        out = self.record.summary()
        out.update(level=self.level, rim=self.rim, weak_residual=self.weak_residual)
        return out


def mp_solve(model: SuperlinearModel | None = None, basis: SpectralBasis | None = None,
             seed: int = 0, n_nodes: int = 41, max_steps: int = 2000, tol: float = 1e-4,
             tol_grad: float = 1e-6, level_margin: float = 1e-3, check: bool = True) -> MPResult:
    """Mountain pass between ``0`` and a large multiple of the first mode.

    The path lives in the nonnegative cone, is deformed with
    :func:`fracnehari.mountain_pass.deform`, and its highest node is polished
    by Newton's method.

    Raises
    ------
    HypothesisFailure
        If ``check`` and the model fails a structural hypothesis.
    LevelViolationError
        If the level is not below ``pi/2 - level_margin``.
    NontrivialityError
        If the polished point collapses to ``0``.
    """
    from .errors import DegenerateSecondSolutionError, HypothesisFailure

    model = default_model() if model is None else model
    basis = build_basis() if basis is None else basis
    report = None
    if check:
        report = hypothesis_check(model)
        if not report.all_pass:
            raise HypothesisFailure(report.failed)
    problem = SuperlinearProblem(model, basis)
    zero = np.zeros((2, basis.K))
    rim = geometry_probe(problem, seed=seed)
    w_bar = build_endpoint(zero, problem)
    path = initial_path(zero, w_bar, problem, n_nodes)
    path = deform(path, problem, max_steps=max_steps, tol=tol)
    try:
        rec = refine_to_critical(path, problem, zero, tol_grad=tol_grad,
                                 branch=Branch.SUPERLINEAR, min_distance=1e-6)
    except DegenerateSecondSolutionError as exc:
        raise NontrivialityError(str(exc)) from exc
    level = path.level
    if rec.norm < 1e-6:
        raise NontrivialityError("critical point collapsed to zero")
    if not level < math.pi / 2 - level_margin:
        raise LevelViolationError(f"mountain-pass level {level:.6g} is not below pi/2")
    rec.diagnostics["ar_gap"] = problem.ar_gap(rec.field)
    res = weak_residual(problem, rec.field, seed=seed)
    return MPResult(rec, level, rim, res, list(path.history), report)
