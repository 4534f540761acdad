"""Moser-type concentrating traces and a Trudinger-Moser sampling harness.

The profile used for ``k >= 2`` is the boundary trace of the truncated
logarithm::

    psi_k(x) = (2 pi)**-1/2 * { sqrt(log k)                 |x| <= 1/k
                              { log(1/|x|) / sqrt(log k)    1/k <= |x| < 1

projected onto a sine basis and rescaled to unit spectral seminorm.  Its
plateau value obeys ``m_k(0)**2 ~ log(k) / pi``.  Resolving the plateau needs
many modes, so this module works with the FFT basis of
:func:`fracnehari.spectral.build_sine_basis`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionError
from .spectral import SpectralBasis, build_sine_basis, pair_norm, seminorm_sq

__all__ = [
    "MoserFamily",
    "MTReport",
    "moser_profile",
    "moser_trace",
    "moser_family",
    "moser_basis",
    "plateau_slope",
    "mt_functional",
    "mt_sup_harness",
    "DEFAULT_K_VALUES",
]

DEFAULT_K_VALUES = tuple(2**j for j in range(4, 13))
MODES_PER_K = 8
_EXP_LIMIT = 700.0


def moser_profile(x, k: int) -> np.ndarray:
    """Unnormalised truncated-log profile at the points ``x``."""
    if k < 2:
        raise ValueError("k must be >= 2")
    r = np.abs(np.asarray(x, dtype=float))
    L = math.log(k)
    out = np.zeros_like(r)
    inner = r <= 1.0 / k
    mid = ~inner & (r < 1.0)
    out[inner] = math.sqrt(L)
    out[mid] = np.log(1.0 / r[mid]) / math.sqrt(L)
    return out / math.sqrt(2 * math.pi)


def moser_basis(k_max: int = DEFAULT_K_VALUES[-1], modes_per_k: int = 32) -> SpectralBasis:
    """FFT sine basis with ``modes_per_k * k_max`` modes (rounded up to a power of two)."""
    K = 1 << math.ceil(math.log2(modes_per_k * k_max))
    return build_sine_basis(K, 4 * K)


def _value_at_zero(c, basis):
    k = np.arange(1, basis.K + 1)
    return float(c @ np.sin(k * np.pi / 2))


def moser_trace(k: int, basis: SpectralBasis):
    """Normalised coefficients of the Moser trace.

    Returns ``(coeffs, plateau, raw_norm)`` where ``plateau`` is the value of
    the normalised trace at ``x = 0`` and ``raw_norm`` the seminorm before
    rescaling.

    Raises
    ------
    ResolutionError
        If the plateau ``[-1/k, 1/k]`` is narrower than the node spacing or
        the basis has fewer than ``8 k`` modes.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if 1.0 / k < basis.max_node_spacing or basis.K < MODES_PER_K * k:
        raise ResolutionError(
            f"k = {k} needs at least {MODES_PER_K * k} modes and node spacing below 1/k; "
            f"basis has K = {basis.K}, spacing {basis.max_node_spacing:.3g}"
        )
    c = basis.analyze(moser_profile(basis.nodes, k))
    raw = math.sqrt(float(seminorm_sq(c, basis)))
    c = c / raw
    return c, _value_at_zero(c, basis), raw


@dataclass
class MoserFamily:
    """Normalised Moser traces for several ``k``.

    ``pair(i)`` returns the pair ``(m_k, m_k) / sqrt(2)`` of unit pair norm.
    """

    k_values: list
    traces: list = field(repr=False)
    plateau: np.ndarray
    raw_norms: np.ndarray

    def pair(self, i: int) -> np.ndarray:
        c = self.traces[i] / math.sqrt(2.0)
        return np.stack([c, c])

    @property
    def pair_plateau(self) -> np.ndarray:
        return self.plateau / math.sqrt(2.0)


def moser_family(k_values=DEFAULT_K_VALUES, basis: SpectralBasis | None = None) -> MoserFamily:
    if basis is None:
        basis = moser_basis(max(k_values))
    traces, plateau, raw = [], [], []
    for k in k_values:
        c, m0, r = moser_trace(k, basis)
        traces.append(c)
        plateau.append(m0)
        raw.append(r)
    return MoserFamily(list(k_values), traces, np.array(plateau), np.array(raw))


def plateau_slope(family: MoserFamily, pair: bool = False) -> float:
    """Least-squares slope of ``plateau**2`` against ``log k``."""
    y = family.pair_plateau**2 if pair else family.plateau**2
    return float(np.polyfit(np.log(family.k_values), y, 1)[0])


def mt_functional(w, a: float, basis: SpectralBasis) -> float:
    """``int exp(a (u**2 + v**2))`` over (-1, 1); ``inf`` if the exponent overflows."""
    u, v = basis.synthesize(w)
    e = a * (u * u + v * v)
    if e.size and np.max(e) > _EXP_LIMIT:
        return math.inf
    return float(basis.grid.integrate(np.exp(e)))


@dataclass
class MTReport:
    """Outcome of :func:`mt_sup_harness`.

    ``growth`` lists ``(k, value)`` for the Moser pairs, ``argmax`` names the
    sample that attained ``max_value`` and ``sample_norms`` holds the pair
    norms of every random sample.
    """

    a: float
    max_value: float
    argmax: str
    growth: list
    random_max: float
    sample_norms: np.ndarray = field(repr=False)
    overflowed: bool = False

    def value(self, k: int) -> float:
        for kk, v in self.growth:
            if kk == k:
                return v
        raise KeyError(k)

    def growth_ratio(self, k_hi: int = 2**12, k_lo: int = 2**6) -> float:
        return self.value(k_hi) / self.value(k_lo)

    @property
    def increasing(self) -> bool:
        vals = [v for _, v in self.growth]
        return bool(np.all(np.diff(vals) > 0))

    def to_rows(self):
        return [{"a": self.a, "k": k, "value": v} for k, v in self.growth]


def _unit_random_pair(basis, rng):
    k = np.arange(1, basis.K + 1)
    w = rng.standard_normal((2, basis.K)) / k
    n = pair_norm(w, basis)
    # land inside [1 - 1e-8, 1] despite rounding
    return w / (n * (1 + 1e-12))


def mt_sup_harness(n_samples: int, a: float, seed: int = 0, basis: SpectralBasis | None = None,
                   k_values=DEFAULT_K_VALUES, family: MoserFamily | None = None) -> MTReport:
    """Largest ``mt_functional`` over random unit pairs and the Moser pairs.

    Random sample ``i`` uses ``default_rng([seed, i])``.  Moser pairs are
    included for every ``k`` the basis resolves.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if basis is None:
        basis = family_basis = moser_basis(max(k_values))
    else:
        family_basis = basis
    best, arg = -math.inf, ""
    norms = np.empty(n_samples)
    rmax = -math.inf
    for i in range(n_samples):
        w = _unit_random_pair(basis, np.random.default_rng([seed, i]))
        norms[i] = pair_norm(w, basis)
        val = mt_functional(w, a, basis)
        rmax = max(rmax, val)
        if val > best:
            best, arg = val, f"random[{i}]"
    if family is None:
        ks = [k for k in k_values if family_basis.K >= MODES_PER_K * k
              and 1.0 / k >= family_basis.max_node_spacing]
        family = moser_family(ks, family_basis)
    growth = []
    for i, k in enumerate(family.k_values):
        val = mt_functional(family.pair(i), a, family_basis)
        growth.append((k, val))
        if val > best:
            best, arg = val, f"moser[k={k}]"
    overflow = not math.isfinite(best)
    return MTReport(float(a), best, arg, growth, rmax, norms, overflow)
