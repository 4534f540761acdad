"""Sine eigenbasis of (-1, 1) and the spectral half-Laplacian.

Fields are stored as coefficient arrays in the Dirichlet eigenbasis
``e_k(x) = sin(k*pi*(x + 1)/2)``, ``k = 1..K``, which is orthonormal in
``L2(-1, 1)``.  A single trace ``u`` is an array of shape ``(K,)`` and a pair
``w = (w1, w2)`` an array of shape ``(2, K)``.  The half-Laplacian acts
diagonally with symbols ``sigma_k = k*pi/2`` and the squared norm of a pair
is ``sum(sigma_k * (c_k**2 + d_k**2))``, the Dirichlet energy of its
harmonic extension to the half strip ``(-1, 1) x (0, inf)``.

Two discretisations are provided:

* :func:`build_basis` - composite Gauss-Legendre nodes with a dense trace
  matrix; used by the solvers (``K`` around 128).
* :func:`build_sine_basis` - uniform midpoint nodes with FFT based sine
  transforms; used for very concentrated profiles that need ``K`` in the
  tens of thousands.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import fft

from .errors import ConfigurationError

__all__ = [
    "QuadratureGrid",
    "SpectralBasis",
    "build_basis",
    "build_sine_basis",
    "synthesize",
    "analyze",
    "half_laplacian_apply",
    "seminorm_sq",
    "pair_norm_sq",
    "pair_norm",
    "extension_energy",
    "integrate",
]


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Quadrature nodes and weights on (-1, 1).

    ``kind`` is ``"gauss"`` for composite Gauss-Legendre (``panels`` panels of
    ``degree`` points) or ``"midpoint"`` for a uniform midpoint rule, where
    ``panels`` is the number of cells and ``degree`` is 1.
    """

    nodes: np.ndarray
    weights: np.ndarray
    panels: int
    degree: int
    kind: str = "gauss"

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, values):
        """Quadrature over the last axis of ``values``."""
        return np.asarray(values) @ self.weights


def _composite_gauss(panels: int, degree: int) -> QuadratureGrid:
    ref_x, ref_w = leggauss(degree)
    edges = np.linspace(-1.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    weights = (half[:, None] * ref_w[None, :]).ravel()
    return QuadratureGrid(nodes, weights, panels, degree, "gauss")


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """First ``K`` Dirichlet sine modes together with their quadrature grid.

    Attributes
    ----------
    K : int
        Number of modes.
    grid : QuadratureGrid
        Nodes used to evaluate every integral over (-1, 1).
    mu, sigma : ndarray
        Eigenvalues ``(k*pi/2)**2`` of ``-d2/dx2`` and the half-Laplacian
        symbols ``k*pi/2``.
    trace_matrix : ndarray or None
        ``e_k(x_j)`` with shape ``(K, n_nodes)``; ``None`` for the FFT basis.
    """

    K: int
    grid: QuadratureGrid
    mu: np.ndarray
    sigma: np.ndarray
    trace_matrix: np.ndarray | None = None
    _deriv_matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @property
    def is_fast(self) -> bool:
        return self.trace_matrix is None

    @property
    def max_node_spacing(self) -> float:
        x = np.concatenate(([-1.0], self.grid.nodes, [1.0]))
        return float(np.max(np.diff(x)))

    def check_coeffs(self, coeffs) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float)
        if c.shape[-1] != self.K:
            raise ValueError(
                f"coefficient array has {c.shape[-1]} modes, basis has {self.K}"
            )
        return c

    def gram_matrix(self) -> np.ndarray:
        """Discrete Gram matrix of the modes; only for the dense basis."""
        E = self.trace_matrix
        if E is None:
            raise ConfigurationError("gram_matrix needs a dense basis")
        return (E * self.weights) @ E.T

    # values <-> coefficients -------------------------------------------

    def synthesize(self, coeffs) -> np.ndarray:
        c = self.check_coeffs(coeffs)
        if self.trace_matrix is not None:
            return c @ self.trace_matrix
        return _fast_synthesize(c, self.grid.size)

    def analyze(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if v.shape[-1] != self.grid.size:
            raise ValueError(
                f"values given at {v.shape[-1]} nodes, grid has {self.grid.size}"
            )
        if self.trace_matrix is not None:
            return (v * self.weights) @ self.trace_matrix.T
        h = 2.0 / self.grid.size
        return 0.5 * h * fft.dst(v, type=2, axis=-1)[..., : self.K]

    def evaluate(self, coeffs, x) -> np.ndarray:
        """Values of ``sum c_k e_k`` at arbitrary points ``x`` in [-1, 1]."""
        c = self.check_coeffs(coeffs)
        return c @ np.sin(np.outer(self.sigma, np.asarray(x, dtype=float) + 1.0))

    def synthesize_derivative(self, coeffs) -> np.ndarray:
        """Node values of ``d/dx sum c_k e_k``."""
        c = self.check_coeffs(coeffs)
        if self.trace_matrix is not None:
            return c @ self._deriv_matrix
        n = self.grid.size
        x = np.zeros(c.shape[:-1] + (n,))
        x[..., 1 : self.K + 1] = 0.5 * self.sigma * c
        return fft.dct(x, type=3, axis=-1)


def _fast_synthesize(c: np.ndarray, n: int) -> np.ndarray:
    x = np.zeros(c.shape[:-1] + (n,))
    x[..., : c.shape[-1]] = 0.5 * c
    return fft.dst(x, type=3, axis=-1)


def _symbols(K: int):
    k = np.arange(1, K + 1, dtype=float)
    sigma = k * np.pi / 2.0
    return sigma**2, sigma


def build_basis(K: int = 128, panels: int = 16, degree: int = 64) -> SpectralBasis:
    """Dense sine basis on a composite Gauss-Legendre grid.

    Raises
    ------
    ConfigurationError
        If ``K < 1`` or the grid has fewer than ``4*K`` nodes.
    """
    if K < 1 or panels < 1 or degree < 1:
        raise ConfigurationError("K, panels and degree must be positive")
    if panels * degree < 4 * K:
        raise ConfigurationError(
            f"under-resolved quadrature: panels*degree = {panels * degree} < 4K = {4 * K}"
        )
    grid = _composite_gauss(panels, degree)
    mu, sigma = _symbols(K)
    phase = np.outer(sigma, grid.nodes + 1.0)
    E = np.sin(phase)
    D = sigma[:, None] * np.cos(phase)
    return SpectralBasis(K, grid, mu, sigma, E, D)


def build_sine_basis(K: int, n_nodes: int | None = None) -> SpectralBasis:
    """FFT backed sine basis on the uniform midpoint grid of ``n_nodes`` cells.

    The midpoint rule integrates products of the first ``n_nodes - 1`` modes
    exactly, so ``analyze`` inverts ``synthesize`` for ``K < n_nodes``.
    """
    if n_nodes is None:
        n_nodes = 4 * K
    if K < 1 or n_nodes <= K:
        raise ConfigurationError("need 1 <= K < n_nodes")
    h = 2.0 / n_nodes
    nodes = -1.0 + (np.arange(n_nodes) + 0.5) * h
    grid = QuadratureGrid(nodes, np.full(n_nodes, h), n_nodes, 1, "midpoint")
    mu, sigma = _symbols(K)
    return SpectralBasis(K, grid, mu, sigma, None, None)


def synthesize(u, basis: SpectralBasis) -> np.ndarray:
    """Node values ``sum_k c_k e_k(x_j)`` (works on the last axis)."""
    return basis.synthesize(u)


def analyze(values, basis: SpectralBasis) -> np.ndarray:
    """Discrete L2 projection ``c_k = sum_j w_j v_j e_k(x_j)``."""
    return basis.analyze(values)


def half_laplacian_apply(u, basis: SpectralBasis) -> np.ndarray:
    return basis.check_coeffs(u) * basis.sigma


def seminorm_sq(u, basis: SpectralBasis) -> np.ndarray:
    """``sum_k sigma_k c_k**2`` over the last axis."""
    c = basis.check_coeffs(u)
    return (c * c) @ basis.sigma


def pair_norm_sq(w, basis: SpectralBasis) -> float:
    return float(np.sum(seminorm_sq(w, basis)))


def pair_norm(w, basis: SpectralBasis) -> float:
    return float(np.sqrt(pair_norm_sq(w, basis)))


def integrate(values, basis: SpectralBasis):
    return basis.grid.integrate(values)


def _graded_gauss(y_max: float, Ny: int, degree: int = 16):
    # geometric panels: the k-th mode decays on the scale 1/sigma_k near y=0
    n_panels = max(1, Ny // degree)
    first = min(y_max, 1e-5 * max(y_max, 1.0))
    if n_panels == 1:
        edges = np.array([0.0, y_max])
    else:
        edges = np.concatenate(([0.0], np.geomspace(first, y_max, n_panels)))
    ref_x, ref_w = leggauss(degree)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    y = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    wy = (half[:, None] * ref_w[None, :]).ravel()
    return y, wy


def extension_energy(w, basis: SpectralBasis, y_max: float = 40.0, Ny: int = 4000) -> float:
    """Dirichlet energy of the harmonic extension of a pair over (0, y_max).

    The extension ``W(x, y) = sum_k c_k e_k(x) exp(-sigma_k y)`` vanishes on
    the lateral sides.  ``|grad W|**2`` is integrated by the x-grid of the
    basis and a geometrically graded Gauss rule in y, without using the
    orthogonality of the modes.  As ``y_max`` grows the value increases to
    :func:`pair_norm_sq`.
    """
    if y_max <= 0:
        raise ConfigurationError("y_max must be positive")
    c = np.atleast_2d(basis.check_coeffs(w))
    y, wy = _graded_gauss(y_max, Ny)
    total = 0.0
    for comp in c:
        if not np.any(comp):
            continue
        for start in range(0, y.size, 256):
            ys = y[start : start + 256]
            decay = np.exp(-np.outer(ys, basis.sigma))
            cy = decay * comp
            Wx = basis.synthesize_derivative(cy)
            Wy = basis.synthesize(-cy * basis.sigma)
            dens = basis.grid.integrate(Wx * Wx + Wy * Wy)
            total += float(dens @ wy[start : start + 256])
    return total
