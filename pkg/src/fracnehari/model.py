"""Concave-convex energy for the half-Laplacian system on (-1, 1).

For a pair ``w = (w1, w2)`` with traces ``u, v`` the energy is::

    I(w) = 1/2 ||w||**2 - lam/(p+q) * B(w) - int G(u, v)

    B(w)    = int f |u|**p |v|**q
    G(u, v) = |u|**alpha |v|**beta exp(u**2 + v**2)

Every integral is the quadrature of the basis grid, so all derivatives below
are exact derivatives of the discrete functional.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DivergedIterateError
from .spectral import SpectralBasis, pair_norm_sq

__all__ = [
    "OVERFLOW_TRACE",
    "NonlinearitySpec",
    "ProblemParams",
    "default_weight",
    "concave_term",
    "energy",
    "gradient",
    "hessian",
    "grad_norm",
    "nehari_residual",
    "second_derivative",
    "curvature_denominator",
    "coercivity_bound",
    "exp_moment",
]

# exp(26**2) is within a factor e**33 of the double overflow threshold
OVERFLOW_TRACE = 26.0


def default_weight(x):
    """Sign-changing weight ``cos(pi x)``, positive around 0."""
    return np.cos(np.pi * np.asarray(x))


def _spow(x, e, eps=0.0):
    """``|x|**e`` with optional smoothing ``(x**2 + eps**2)**(e/2)``."""
    if eps:
        return (x * x + eps * eps) ** (0.5 * e)
    return np.abs(x) ** e


def _exp_guarded(s):
    if s.size and np.max(s) > OVERFLOW_TRACE**2:
        raise DivergedIterateError(
            f"trace magnitude {np.sqrt(np.max(s)):.3g} exceeds {OVERFLOW_TRACE}"
        )
    return np.exp(s)


@dataclass(frozen=True)
class NonlinearitySpec:
    """Pointwise ``G``, its gradient ``(g1, g2)`` and Hessian entries."""

    alpha: float
    beta: float

    def G(self, u, v):
        s = u * u + v * v
        return _spow(u, self.alpha) * _spow(v, self.beta) * _exp_guarded(s)

    def h1(self, u, v):
        return (self.alpha + 2 * u * u) * np.sign(u) * _spow(u, self.alpha - 1) * _spow(v, self.beta)

    def h2(self, u, v):
        return (self.beta + 2 * v * v) * _spow(u, self.alpha) * np.sign(v) * _spow(v, self.beta - 1)

    def g1(self, u, v):
        return self.h1(u, v) * _exp_guarded(u * u + v * v)

    def g2(self, u, v):
        return self.h2(u, v) * _exp_guarded(u * u + v * v)

    def second_partials(self, u, v, eps):
        """``(G_uu, G_uv, G_vv)``; ``|.|**(alpha-2)`` is eps-smoothed."""
        a, b = self.alpha, self.beta
        e = _exp_guarded(u * u + v * v)
        au, bv = _spow(u, a), _spow(v, b)
        guu = ((a + 2 * u * u) * (a - 1 + 2 * u * u) + 4 * u * u) * _spow(u, a - 2, eps) * bv * e
        gvv = ((b + 2 * v * v) * (b - 1 + 2 * v * v) + 4 * v * v) * au * _spow(v, b - 2, eps) * e
        guv = (
            (a + 2 * u * u) * (b + 2 * v * v)
            * np.sign(u) * _spow(u, a - 1) * np.sign(v) * _spow(v, b - 1) * e
        )
        return guu, guv, gvv


@dataclass(frozen=True, eq=False)
class ProblemParams:
    """Full parameterisation of the concave-convex system on a given basis.

    ``weight_values`` holds ``f`` at the quadrature nodes of ``basis``.
    ``eps`` smooths ``|u|**(p-2) u`` in the gradient only; the energy uses
    the exact powers.
    """

    lam: float
    basis: SpectralBasis
    p: float = 0.75
    q: float = 0.75
    alpha: float = 1.5
    beta: float = 1.5
    weight_values: np.ndarray | None = None
    eps: float = 1e-8

    def __post_init__(self):
        if self.weight_values is None:
            object.__setattr__(self, "weight_values", default_weight(self.basis.nodes))
        f = np.asarray(self.weight_values, dtype=float)
        if f.shape != self.basis.nodes.shape:
            raise ConfigurationError("weight_values must be sampled at the basis nodes")
        object.__setattr__(self, "weight_values", f)
        self.validate()

    def validate(self):
        if not self.lam > 0:
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")
        if not (self.p > 0 and self.q > 0 and 1 < self.p + self.q < 2):
            raise ConfigurationError("need p, q > 0 and 1 < p + q < 2")
        if not (self.alpha > 1 and self.beta > 1 and self.alpha + self.beta > 2):
            raise ConfigurationError("need alpha, beta > 1 and alpha + beta > 2")
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        f = self.weight_values
        if not (np.any(f > 0) and np.any(f < 0)):
            warnings.warn("weight f does not change sign on the node set", stacklevel=3)

    @property
    def nonlinearity(self) -> NonlinearitySpec:
        return NonlinearitySpec(self.alpha, self.beta)

    @property
    def pq(self) -> float:
        return self.p + self.q

    @property
    def ab(self) -> float:
        return self.alpha + self.beta

    def with_lambda(self, lam: float) -> "ProblemParams":
        return replace(self, lam=float(lam))

    def traces(self, w):
        u, v = self.basis.synthesize(w)
        return u, v

    # functional interface used by the generic descent / path code
    def energy(self, w):
        return energy(w, self)

    def gradient(self, w):
        return gradient(w, self)

    def hessian(self, w):
        return hessian(w, self)


def _check_pair(w, params):
    w = np.asarray(w, dtype=float)
    if w.shape != (2, params.basis.K):
        raise ValueError(f"expected a pair of shape (2, {params.basis.K}), got {w.shape}")
    return w


def concave_term(w, params: ProblemParams) -> float:
    """``B(w) = int f |u|**p |v|**q`` (no ``lam/(p+q)`` prefactor)."""
    u, v = params.traces(_check_pair(w, params))
    integrand = params.weight_values * _spow(u, params.p) * _spow(v, params.q)
    return float(params.basis.grid.integrate(integrand))


def exp_moment(w, params: ProblemParams) -> float:
    """``int G(u, v)``."""
    u, v = params.traces(_check_pair(w, params))
    return float(params.basis.grid.integrate(params.nonlinearity.G(u, v)))


def energy(w, params: ProblemParams) -> float:
    """``I(w)``; raises :class:`DivergedIterateError` on overflowing traces."""
    w = _check_pair(w, params)
    u, v = params.traces(w)
    quad = params.basis.grid.integrate
    B = quad(params.weight_values * _spow(u, params.p) * _spow(v, params.q))
    G = quad(params.nonlinearity.G(u, v))
    return float(0.5 * pair_norm_sq(w, params.basis) - params.lam / params.pq * B - G)


def _nodal_force(u, v, params):
    p, q, eps = params.p, params.q, params.eps
    kappa = params.lam / params.pq
    f = params.weight_values
    nl = params.nonlinearity
    e = _exp_guarded(u * u + v * v)
    r1 = kappa * p * f * _spow(u, p - 2, eps) * u * _spow(v, q) + nl.h1(u, v) * e
    r2 = kappa * q * f * _spow(u, p) * _spow(v, q - 2, eps) * v + nl.h2(u, v) * e
    return r1, r2


def gradient(w, params: ProblemParams) -> np.ndarray:
    """Coefficient gradient ``dI/dc`` with shape ``(2, K)``."""
    w = _check_pair(w, params)
    u, v = params.traces(w)
    r1, r2 = _nodal_force(u, v, params)
    return params.basis.sigma * w - params.basis.analyze(np.stack([r1, r2]))


def hessian(w, params: ProblemParams) -> np.ndarray:
    """Dense ``(2K, 2K)`` Hessian of the discrete energy (dense basis only)."""
    w = _check_pair(w, params)
    basis = params.basis
    E = basis.trace_matrix
    if E is None:
        raise ConfigurationError("hessian needs a dense basis")
    u, v = params.traces(w)
    p, q, eps = params.p, params.q, params.eps
    kappa = params.lam / params.pq
    f = params.weight_values
    cuu = kappa * f * p * (p - 1) * _spow(u, p - 2, eps) * _spow(v, q)
    cvv = kappa * f * q * (q - 1) * _spow(u, p) * _spow(v, q - 2, eps)
    cuv = (kappa * f * p * q * _spow(u, p - 2, eps) * u * _spow(v, q - 2, eps) * v)
    guu, guv, gvv = params.nonlinearity.second_partials(u, v, eps)
    K = basis.K
    Ew = E * basis.weights
    H = np.zeros((2 * K, 2 * K))
    H[:K, :K] = -(Ew * (cuu + guu)) @ E.T
    H[K:, K:] = -(Ew * (cvv + gvv)) @ E.T
    H[:K, K:] = -(Ew * (cuv + guv)) @ E.T
    H[K:, :K] = H[:K, K:].T
    H[np.diag_indices(2 * K)] += np.concatenate([basis.sigma, basis.sigma])
    return H


def grad_norm(g, basis: SpectralBasis) -> float:
    """Dual (H^{-1/2}) norm ``sqrt(sum g_k**2 / sigma_k)`` of a covector."""
    g = np.asarray(g, dtype=float)
    return float(np.sqrt(np.sum(g * g / basis.sigma)))


def nehari_residual(w, params: ProblemParams) -> float:
    """``<I'(w), w> = ||w||**2 - lam B(w) - int (g1 u + g2 v)``."""
    w = _check_pair(w, params)
    u, v = params.traces(w)
    nl = params.nonlinearity
    quad = params.basis.grid.integrate
    B = quad(params.weight_values * _spow(u, params.p) * _spow(v, params.q))
    gw = quad(nl.g1(u, v) * u + nl.g2(u, v) * v)
    return float(pair_norm_sq(w, params.basis) - params.lam * B - gw)


def _curvature_integrals(w, params, shift):
    u, v = params.traces(w)
    s = u * u + v * v
    ab = params.ab
    G = params.nonlinearity.G(u, v)
    block = (ab + 2 * s) * (ab - shift + 2 * s) + 4 * s
    return u, v, params.basis.grid.integrate(block * G)


def second_derivative(w, params: ProblemParams) -> float:
    """``d2/dt2 I(t w)`` at ``t = 1``; its sign classifies N+, N-, N0."""
    w = _check_pair(w, params)
    u, v, expo = _curvature_integrals(w, params, 1.0)
    B = params.basis.grid.integrate(params.weight_values * _spow(u, params.p) * _spow(v, params.q))
    return float(pair_norm_sq(w, params.basis) - (params.pq - 1) * params.lam * B - expo)


def curvature_denominator(w, params: ProblemParams) -> float:
    """``(2-p-q)||w||**2 - int {(a-p-q+2s)(a+2s) + 4s} G`` with ``a = alpha+beta``.

    Diagnostic only.  Along a minimising sequence on the Nehari set this
    quantity has to stay away from zero.
    """
    w = _check_pair(w, params)
    _, _, expo = _curvature_integrals(w, params, params.pq)
    return float((2 - params.pq) * pair_norm_sq(w, params.basis) - expo)


def coercivity_bound(w, params: ProblemParams) -> float:
    """Lower bound ``(1/2 - 1/a)||w||**2 - lam (1/(p+q) - 1/a) B(w)`` valid on N."""
    a = params.ab
    return float(
        (0.5 - 1 / a) * pair_norm_sq(w, params.basis)
        - params.lam * (1 / params.pq - 1 / a) * concave_term(w, params)
    )
