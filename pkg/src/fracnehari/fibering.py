"""Fibering maps along rays ``t -> t w`` and projection onto the Nehari set.

``Phi_w(t) = I(t w)`` has a critical point at ``t`` exactly when::

    Psi_w(t) = t**(2-p-q) ||w||**2 - t**(1-p-q) int (g1(tw) w1 + g2(tw) w2)

equals ``lam * B(w)``.  ``Psi_w`` rises from 0, peaks at ``t_star`` and falls
to ``-inf``, so the ray meets the Nehari set once above ``t_star`` (``t_minus``)
and, when ``B(w) > 0`` and the peak clears ``lam * B``, once below it
(``t_plus``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateFieldError, NoProjectionError
from .model import OVERFLOW_TRACE, ProblemParams, _spow, concave_term, second_derivative
from .spectral import SpectralBasis, pair_norm_sq

log = logging.getLogger(__name__)

__all__ = [
    "FiberingProfile",
    "Lambda0Estimate",
    "Fiber",
    "psi_eval",
    "find_tstar",
    "project",
    "project_plus",
    "project_minus",
    "gamma_membership",
    "c_star_integrand",
    "lambda0_estimate",
    "random_direction",
    "n0_probe",
]

_SCAN = 2.0 ** np.arange(-20.0, 20.25, 0.25)
ROOT_RTOL = 1e-10


@dataclass
class FiberingProfile:
    B: float
    case_tag: str
    t_star: float
    t_minus: float
    t_plus: float | None = None
    psi_samples: np.ndarray = field(default_factory=lambda: np.empty((0, 2)), repr=False)

    @property
    def has_plus(self) -> bool:
        return self.t_plus is not None


class Fiber:
    """Cached trace data of one direction ``w`` for repeated ``Psi_w`` calls."""

    def __init__(self, w, params: ProblemParams):
        self.w = np.asarray(w, dtype=float)
        self.params = params
        u, v = params.traces(self.w)
        self.s = u * u + v * v
        self.P = _spow(u, params.alpha) * _spow(v, params.beta)
        self.norm_sq = pair_norm_sq(self.w, params.basis)
        self.B = concave_term(self.w, params)
        self.smax = float(np.max(self.s)) if self.s.size else 0.0
        if self.norm_sq == 0.0:
            raise DegenerateFieldError("zero field has no fibering map")

    def _overflows(self, t):
        return t * t * self.smax > OVERFLOW_TRACE**2

    def coupling(self, t):
        """``int (g1(tw) tw1 + g2(tw) tw2)``."""
        a = self.params.ab
        ts = t * t * self.s
        integrand = (a + 2 * ts) * t**a * self.P * np.exp(ts)
        return float(self.params.basis.grid.integrate(integrand))

    def psi(self, t):
        if t <= 0:
            return 0.0
        if self._overflows(t):
            return -math.inf
        pq = self.params.pq
        return (t * t * self.norm_sq - self.coupling(t)) * t ** (-pq)

    def psi_prime_fd(self, t, rel=1e-5):
        h = rel * t
        return (self.psi(t + h) - self.psi(t - h)) / (2 * h)

    def gap(self, t):
        """``Psi_w(t) - lam B(w)``; same sign as ``Phi_w'(t)``."""
        return self.psi(t) - self.params.lam * self.B


def psi_eval(w, t: float, params: ProblemParams) -> float:
    """``Psi_w(t)``; ``-inf`` once the exponential term overflows."""
    if t <= 0:
        raise ValueError("t must be positive")
    return Fiber(w, params).psi(t)


def _bisect(f, lo, hi, rtol=ROOT_RTOL, max_iter=200):
    flo = f(lo)
    fhi = f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError("root not bracketed")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= rtol * abs(mid):
            break
    return 0.5 * (lo + hi)


def _tstar(fiber: Fiber):
    vals = np.array([fiber.psi(t) for t in _SCAN])
    i = int(np.argmax(vals))
    if i == 0 or i == len(_SCAN) - 1 or not np.isfinite(vals[i]):
        raise DegenerateFieldError("fibering map has no interior maximum on [2^-20, 2^20]")
    finite = vals[np.isfinite(vals)]
    d = np.diff(finite)
    peaks = np.sum((d[:-1] > 0) & (d[1:] <= 0))
    if peaks > 1:
        log.warning("non-unimodal fibering profile: %d local maxima on the scan", peaks)
    res = minimize_scalar(
        lambda t: -fiber.psi(t),
        bracket=(_SCAN[i - 1], _SCAN[i], _SCAN[i + 1]),
        method="golden",
        options={"xtol": 1e-10},
    )
    return float(res.x)


def find_tstar(w, params: ProblemParams) -> float:
    """Maximiser of ``Psi_w`` (geometric scan, then golden section)."""
    return _tstar(Fiber(w, params))


def _profile_samples(fiber, lo, hi, n=64):
    ts = np.geomspace(lo, hi, n)
    return np.column_stack([ts, [fiber.psi(t) for t in ts]])


def project(w, params: ProblemParams) -> FiberingProfile:
    """Locate ``t_plus`` and ``t_minus`` on the ray through ``w``.

    Raises
    ------
    NoProjectionError
        ``B(w) > 0`` but ``max Psi_w <= lam B(w)``: lambda is too large for
        this direction and the ray misses the Nehari set.
    """
    fiber = Fiber(w, params)
    t_star = _tstar(fiber)
    target = params.lam * fiber.B
    peak = fiber.psi(t_star)

    if fiber.B > 0 and peak <= target:
        raise NoProjectionError(
            f"max Psi = {peak:.6g} <= lam*B = {target:.6g}; the ray misses the Nehari set"
        )
    hi = 2.0 * t_star
    while fiber.gap(hi) >= 0:
        hi *= 2.0
    t_minus = _bisect(fiber.gap, t_star, hi)

    if fiber.B <= 0:
        samples = _profile_samples(fiber, t_star / 64, 2 * t_minus)
        return FiberingProfile(fiber.B, "Case1", t_star, t_minus, None, samples)

    lo = 0.5 * t_star
    while fiber.gap(lo) >= 0:
        lo *= 0.5
    t_plus = _bisect(fiber.gap, lo, t_star)
    samples = _profile_samples(fiber, t_plus / 4, 2 * t_minus)
    return FiberingProfile(fiber.B, "Case2", t_star, t_minus, t_plus, samples)


def project_plus(w, params: ProblemParams):
    prof = project(w, params)
    if prof.t_plus is None:
        raise NoProjectionError("B(w) <= 0: the ray only meets N-")
    return prof.t_plus * np.asarray(w), prof


def project_minus(w, params: ProblemParams):
    prof = project(w, params)
    return prof.t_minus * np.asarray(w), prof


def _block_integral(w, params, c1, c2):
    u, v = params.traces(w)
    s = u * u + v * v
    a = params.ab
    G = params.nonlinearity.G(u, v)
    return float(params.basis.grid.integrate((a - c1 + 2 * s) * (a + c2 + 2 * s) * G))


def gamma_membership(w, params: ProblemParams) -> bool:
    """Whether ``||w||**2 <= 1/(2-p-q) int (a-p-q+2s)(a+2+2s) G``."""
    w = np.asarray(w, dtype=float)
    rhs = _block_integral(w, params, params.pq, 2.0) / (2 - params.pq)
    return bool(pair_norm_sq(w, params.basis) <= rhs)


def c_star_integrand(w, params: ProblemParams) -> float:
    """``int (a-2+2s)(a+2s) G``, the quantity minimised over Gamma."""
    return _block_integral(np.asarray(w, dtype=float), params, 2.0, 0.0)


def random_direction(basis: SpectralBasis, rng, positive=False, decay=1.0):
    """Gaussian coefficients scaled by ``k**-decay``; optionally ``|trace|``."""
    k = np.arange(1, basis.K + 1)
    w = rng.standard_normal((2, basis.K)) / k**decay
    if positive:
        w = basis.analyze(np.abs(basis.synthesize(w)))
    return w


@dataclass
class Lambda0Estimate:
    """Sampled heuristic for the multiplicity threshold (not a certified bound)."""

    C_star_hat: float
    a: float
    C_f: float
    lambda0_hat: float
    samples_used: int
    r: float | None = None


def _weight_norm(params, r):
    f = params.weight_values
    if r is None or math.isinf(r):
        return float(np.max(np.abs(f)))
    return float(params.basis.grid.integrate(np.abs(f) ** r) ** (1.0 / r))


def lambda0_estimate(params: ProblemParams, n_samples: int = 64, seed: int = 0, r=None) -> Lambda0Estimate:
    """Estimate ``C_*`` by sampling ``t_star(v) v`` and form ``lambda0_hat``.

    ``lambda0_hat = C_star_hat**(1-a) / ((2-p-q) C_f)`` with ``a = 1 - 1/r``.
    With ``r=None`` the weight is treated as bounded: ``a = 1`` and
    ``C_f = max|f|``.  Sample ``i`` is drawn from ``default_rng([seed, i])``
    so enlarging ``n_samples`` only adds candidates.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    best = math.inf
    used = 0
    for i in range(n_samples):
        rng = np.random.default_rng([seed, i])
        v = random_direction(params.basis, rng)
        try:
            t = find_tstar(v, params)
        except DegenerateFieldError:
            continue
        best = min(best, c_star_integrand(t * v, params))
        used += 1
    a = 1.0 if r is None or math.isinf(r) else 1.0 - 1.0 / r
    C_f = _weight_norm(params, r)
    lam0 = best ** (1.0 - a) / ((2.0 - params.pq) * C_f)
    return Lambda0Estimate(best, a, C_f, lam0, used, r)


def n0_probe(params: ProblemParams, n_trials: int = 1000, seed: int = 0):
    """Smallest ``|Phi''(1)| / ||w||**2`` over projected random directions.

    Returns ``(min_ratio, n_projected)``; directions whose ray misses the
    Nehari set are skipped.
    """
    best = math.inf
    count = 0
    for i in range(n_trials):
        rng = np.random.default_rng([seed, i])
        w = random_direction(params.basis, rng)
        try:
            prof = project(w, params)
        except (NoProjectionError, DegenerateFieldError):
            continue
        for t in (prof.t_plus, prof.t_minus):
            if t is None:
                continue
            tw = t * w
            ratio = abs(second_derivative(tw, params)) / pair_norm_sq(tw, params.basis)
            best = min(best, ratio)
            count += 1
    return best, count
