"""Second solution: min-max over paths inside the translated cone above w_tilde.

The cone is ``T = {z : z1 >= w1_tilde, z2 >= w2_tilde}`` tested at the
quadrature nodes.  Paths run from ``w_tilde`` to ``w_tilde + w_bar`` where
``I(w_tilde + w_bar) < 0``; the highest node of the path is pushed downhill
until it sits near a saddle, which Newton's method then polishes.

Everything here takes a generic *functional* (``energy``, ``gradient``,
``hessian`` and ``basis``), so the superlinear problem reuses it with a zero
cone base.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from ._descent import newton_critical, sobolev_direction
from .errors import (
    ConfigurationError,
    DegenerateSecondSolutionError,
    DivergedIterateError,
    InconsistentStateError,
)
from .model import concave_term, exp_moment, grad_norm
from .nehari import Branch, SolutionRecord, make_record
from .spectral import SpectralBasis, pair_norm

log = logging.getLogger(__name__)

__all__ = [
    "PathState",
    "mode1_pair",
    "build_endpoint",
    "cone_project",
    "in_cone",
    "initial_path",
    "deform",
    "refine_to_critical",
    "solve_second",
]

CONE_SLACK = 1e-12
SPHERE_RADIUS = 1e-2


def _energy(functional, w):
    try:
        return functional.energy(w)
    except DivergedIterateError:
        return math.inf


def mode1_pair(basis: SpectralBasis) -> np.ndarray:
    """Both components equal to the first mode, scaled to unit pair norm."""
    z = np.zeros((2, basis.K))
    z[:, 0] = 1.0 / math.sqrt(2.0 * basis.sigma[0])
    return z


def build_endpoint(w_tilde, functional, max_doublings: int = 60):
    """Smallest ``w_bar = s * mode1`` with ``I(w_tilde + w_bar) < min(0, I(w_tilde)) - 1``.

    ``s`` runs over powers of two; the last doubling is bisected once, so
    the returned scale is ``S`` or ``0.75 S``.  When a doubling overflows
    the exponential the growth factor drops to ``sqrt(2)`` and then
    ``2**(1/4)``.

    Raises
    ------
    DivergedIterateError
        If no admissible scale is found within ``max_doublings`` steps.
    """
    w_tilde = np.asarray(w_tilde, dtype=float)
    z = mode1_pair(functional.basis)
    target = min(0.0, _energy(functional, w_tilde)) - 1.0
    s_prev, s, factor = 0.0, 1.0, 2.0
    for _ in range(max_doublings):
        try:
            val = functional.energy(w_tilde + s * z)
        except DivergedIterateError:
            if factor <= 2.0**0.25 or s_prev == 0.0:
                break
            factor = math.sqrt(factor)
            s = s_prev * factor
            continue
        if val < target:
            mid = 0.5 * (s_prev + s)
            if s_prev > 0 and _energy(functional, w_tilde + mid * z) < target:
                s = mid
            return s * z
        s_prev, s = s, s * factor
    raise DivergedIterateError("no endpoint with negative energy before overflow")


# cone projection ------------------------------------------------------------


def in_cone(z, w_tilde, basis: SpectralBasis, slack: float = CONE_SLACK) -> bool:
    d = basis.synthesize(np.asarray(z) - np.asarray(w_tilde))
    return bool(np.all(d >= -slack))


def _nnls_lift(y0, basis: SpectralBasis):
    """Closest ``y`` to ``y0`` in the H^{1/2} norm with nonnegative node values.

    Solved through the dual: ``y = y0 + S^{-1} E mu`` with ``mu >= 0``
    minimising ``||S^{-1/2} E mu + S^{1/2} y0||``.  Only nodes that are
    violated (or nearly so) enter the working set, which grows until the
    primal point is feasible.
    """
    E = basis.trace_matrix
    S = basis.sigma
    vals = y0 @ E
    if np.all(vals >= 0):
        return y0
    rs = np.sqrt(S)
    rhs = -rs * y0
    active = vals < 1e-3 * max(np.max(np.abs(vals)), 1e-300)
    for _ in range(20):
        idx = np.flatnonzero(active)
        M = E[:, idx] / rs[:, None]
        mu, _ = nnls(M, rhs, maxiter=50 * max(idx.size, 10))
        y = y0 + (E[:, idx] @ mu) / S
        vals = y @ E
        bad = vals < 0
        bad[idx] = False
        if not np.any(bad & (vals < -1e-14)):
            return y
        active |= bad
    return y


def cone_project(z, w_tilde, basis: SpectralBasis) -> np.ndarray:
    """Map ``z`` into the cone above ``w_tilde``.

    The traces are first replaced by their pointwise maximum with those of
    ``w_tilde`` and re-analysed.  The resulting coefficients may still dip
    below ``w_tilde`` between modes (truncation undershoot), so a final
    minimal H^{1/2} correction enforces ``z >= w_tilde`` at every node.
    The map is the identity on the cone and therefore idempotent.
    """
    z = np.asarray(z, dtype=float)
    w_tilde = np.asarray(w_tilde, dtype=float)
    if basis.is_fast:
        raise ConfigurationError("cone_project needs a dense basis")
    if in_cone(z, w_tilde, basis, 0.0):
        return z.copy()
    base = basis.synthesize(w_tilde)
    lifted = basis.analyze(np.maximum(basis.synthesize(z), base))
    y = np.stack([_nnls_lift(c, basis) for c in lifted - w_tilde])
    return w_tilde + y


# paths ----------------------------------------------------------------------


@dataclass
class PathState:
    """Discrete path ``gamma(t_i)``, ``i = 0..P-1``, with cached energies.

    The path is sampled at its nodes and once inside each segment:
    ``mid_energies[j]`` is the energy at ``(1-s) gamma_j + s gamma_{j+1}``
    with ``s = mid_positions[j]``.  ``level`` is
    the largest sampled energy, ``interior_level`` the same without the two
    endpoints, and ``argmax_index`` the highest interior node.  ``history``
    records the level after every accepted deformation step.
    """

    nodes: np.ndarray
    energies: np.ndarray
    base: np.ndarray
    mid_energies: np.ndarray = field(default_factory=lambda: np.empty(0))
    mid_positions: np.ndarray = field(default_factory=lambda: np.empty(0))
    history: list = field(default_factory=list)
    steps: int = 0
    projected_grad: float = math.inf
    diagnostics: dict = field(default_factory=dict)

    @property
    def endpoint_low(self) -> np.ndarray:
        return self.nodes[0]

    @property
    def endpoint_high(self) -> np.ndarray:
        return self.nodes[-1]

    @property
    def mid_max(self) -> float:
        return float(np.max(self.mid_energies)) if self.mid_energies.size else -math.inf

    @property
    def argmax_index(self) -> int:
        return 1 + int(np.argmax(self.energies[1:-1]))

    @property
    def interior_level(self) -> float:
        return max(float(np.max(self.energies[1:-1])), self.mid_max)

    @property
    def level(self) -> float:
        return max(float(np.max(self.energies)), self.mid_max)

    def peak(self) -> tuple:
        """``(nodes_to_move, point)`` for the highest interior sample.

        If a segment sample beats every interior node, both interior ends
        of that segment move and the point is the segment sample itself.
        """
        m = self.argmax_index
        if self.mid_energies.size and self.mid_max > self.energies[m]:
            j = int(np.argmax(self.mid_energies))
            movers = [i for i in (j, j + 1) if 0 < i < len(self.nodes) - 1]
            s = self.mid_positions[j]
            return movers, (1 - s) * self.nodes[j] + s * self.nodes[j + 1]
        return [m], self.nodes[m]

    def copy(self) -> "PathState":
        return PathState(
            self.nodes.copy(), self.energies.copy(), self.base.copy(), self.mid_energies.copy(),
            self.mid_positions.copy(), list(self.history), self.steps, self.projected_grad, dict(self.diagnostics),
        )


def initial_path(w_tilde, w_bar, functional, n_nodes: int = 41) -> PathState:
    """Straight segment from ``w_tilde`` to ``w_tilde + w_bar``."""
    if n_nodes < 3:
        raise ConfigurationError("a path needs at least 3 nodes")
    w_tilde = np.asarray(w_tilde, dtype=float)
    t = np.linspace(0.0, 1.0, n_nodes)
    nodes = w_tilde[None] + t[:, None, None] * np.asarray(w_bar)[None]
    nodes[0] = w_tilde
    energies, mids, pos = _sampled_level(nodes, functional)
    path = PathState(nodes, energies, w_tilde.copy(), mids, pos)
    path.history.append(path.level)
    return path


def _reparametrize(nodes, basis):
    """Redistribute interior nodes to equal H^{1/2} arc length.

    New nodes are convex combinations of neighbouring old nodes, so cone
    membership is preserved; the endpoints are copied unchanged.
    """
    seg = np.array([pair_norm(b - a, basis) for a, b in zip(nodes[:-1], nodes[1:])])
    arc = np.concatenate(([0.0], np.cumsum(seg)))
    if arc[-1] == 0:
        return nodes.copy()
    out = nodes.copy()
    targets = np.linspace(0.0, arc[-1], len(nodes))
    for i in range(1, len(nodes) - 1):
        j = min(int(np.searchsorted(arc, targets[i], side="right")) - 1, len(seg) - 1)
        s = 0.0 if seg[j] == 0 else (targets[i] - arc[j]) / seg[j]
        out[i] = (1 - s) * nodes[j] + s * nodes[j + 1]
    return out


def _hermite_argmax(e0, e1, d0, d1):
    """Maximiser on [0, 1] of the cubic with end values ``e0, e1`` and slopes ``d0, d1``."""
    # p(s) = e0 + d0 s + b s^2 + c s^3
    b = 3 * (e1 - e0) - 2 * d0 - d1
    c = d0 + d1 - 2 * (e1 - e0)
    cand = [0.5]
    roots = np.roots([3 * c, 2 * b, d0]) if (c or b) else []
    cand += [float(r.real) for r in roots if abs(r.imag) < 1e-14 and 0 < r.real < 1]
    vals = [e0 + d0 * t + b * t * t + c * t**3 for t in cand]
    return cand[int(np.argmax(vals))]


def _sampled_level(nodes, functional):
    """Node energies plus one energy sample inside every segment.

    The sample sits where the cubic Hermite interpolant of the segment
    (end energies and directional derivatives) peaks, or at the midpoint
    when the cubic has no interior maximum.  Returns ``(node_energies,
    segment_energies, segment_positions)``.
    """
    energies = np.array([_energy(functional, n) for n in nodes])
    slopes = []
    for n in nodes:
        try:
            slopes.append(functional.gradient(n))
        except DivergedIterateError:
            slopes.append(None)
    vals, pos = [], []
    for j, (a, b) in enumerate(zip(nodes[:-1], nodes[1:])):
        step = b - a
        s = 0.5
        if slopes[j] is not None and slopes[j + 1] is not None and np.all(np.isfinite(energies[j : j + 2])):
            s = _hermite_argmax(energies[j], energies[j + 1],
                                float(np.sum(slopes[j] * step)), float(np.sum(slopes[j + 1] * step)))
        pos.append(s)
        vals.append(_energy(functional, a + s * step))
    return energies, np.array(vals), np.array(pos)


def deform(path: PathState, functional, max_steps: int = 2000, tol: float = 1e-4,
           smoothing: float = 0.25) -> PathState:
    """Steepest-descent deformation of the highest point of a path.

    At each step the highest interior node (or both ends of the segment
    holding the highest sample) moves along the H^{1/2} gradient taken at
    the highest sample, the neighbours by
    ``smoothing`` times the same displacement, and every moved node is
    projected back into the cone.  The interior nodes are then
    redistributed to equal arc length so the path cannot tear, and the step
    is accepted only if the sampled level does not increase; otherwise the
    step length is halved.  Endpoints are
    never touched.  Stops when the projected gradient at the highest sample
    falls below ``tol * (1 + ||w||)``, after ``max_steps``, or when no step
    length lowers the level; ``diagnostics["stop_reason"]`` says which.

    Raises
    ------
    InconsistentStateError
        If the interior of the path drops below the energy of the cone
        base, i.e. the base is not a local minimum in the cone.
    """
    path = path.copy()
    basis = functional.basis
    base = path.base
    E_base = path.energies[0]
    P = len(path.nodes)
    if not path.diagnostics.get("reparametrized"):
        path.nodes = _reparametrize(path.nodes, basis)
        path.energies, path.mid_energies, path.mid_positions = _sampled_level(path.nodes, functional)
        path.history[-1:] = [path.level]
        path.diagnostics["reparametrized"] = True
    floor = E_base - 1e-10 * (1 + abs(E_base))
    level = path.level
    tau = 1.0
    reason = "max_steps"
    for _ in range(max_steps):
        if path.interior_level < floor:
            raise InconsistentStateError(
                f"path level {path.interior_level:.6g} fell below I(base) = {E_base:.6g}"
            )
        movers, w = path.peak()
        d = sobolev_direction(functional.gradient(w), basis)
        pg = pair_norm(cone_project(w + d, base, basis) - w, basis)
        path.projected_grad = pg
        if pg < tol * (1 + pair_norm(w, basis)):
            reason = "tolerance"
            break
        shift = np.zeros_like(path.nodes)
        # translate the peak node (or the peak segment) along the direction at the peak
        for i in movers:
            shift[i] = d
            for j in (i - 1, i + 1):
                if j not in movers:
                    shift[j] = smoothing * d
        moved = [j for j in range(1, P - 1) if np.any(shift[j])]
        accepted = False
        while tau > 1e-12:
            nodes = path.nodes.copy()
            for j in moved:
                nodes[j] = cone_project(nodes[j] + tau * shift[j], base, basis)
            nodes = _reparametrize(nodes, basis)
            energies, seg_vals, seg_pos = _sampled_level(nodes, functional)
            new_level = max(float(np.max(energies)), float(np.max(seg_vals)))
            if new_level <= level:
                path.nodes, path.energies = nodes, energies
                path.mid_energies, path.mid_positions = seg_vals, seg_pos
                level = new_level
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            reason = "blocked"
            break
        path.steps += 1
        path.history.append(level)
        tau = min(2.0 * tau, 4.0)
    path.diagnostics["stop_reason"] = reason
    if path.interior_level < floor:
        raise InconsistentStateError(
            f"path level {path.interior_level:.6g} fell below I(base) = {E_base:.6g}"
        )
    return path


def _sphere_minimum(functional, base, direction, radius, n_iter=200):
    """Projected descent for ``min I`` on ``T`` intersected with the sphere
    ``||z - base|| = radius``; used when the path level collapses to the base."""
    basis = functional.basis
    z = base + radius * direction / pair_norm(direction, basis)
    E = _energy(functional, z)
    tau = 1.0
    for _ in range(n_iter):
        d = sobolev_direction(functional.gradient(z), basis)
        while tau > 1e-12:
            c = cone_project(z + tau * d, base, basis)
            r = pair_norm(c - base, basis)
            if r == 0:
                tau *= 0.5
                continue
            c = base + radius * (c - base) / r
            Ec = _energy(functional, c)
            if Ec < E:
                z, E = c, Ec
                tau = min(2 * tau, 4.0)
                break
            tau *= 0.5
        else:
            break
    return z, E


def refine_to_critical(path: PathState, functional, w_tilde=None, tol_grad: float = 1e-6,
                       tol_res: float = 1e-6, branch=Branch.MOUNTAIN_PASS,
                       min_distance: float = 1e-4, max_newton: int = 60) -> SolutionRecord:
    """Newton polish from the argmax node of a deformed path.

    The record carries ``dominates`` (whether both traces of the critical
    point stay above those of the cone base within 1e-8) and the distance to
    the cone base in its diagnostics.

    Raises
    ------
    DegenerateSecondSolutionError
        If the polish falls back onto the cone base.
    """
    basis = functional.basis
    base = path.base if w_tilde is None else np.asarray(w_tilde, dtype=float)
    start = path.peak()[1]
    w, gn, it = newton_critical(functional, start, tol=0.01 * tol_grad, max_iter=max_newton)
    if gn >= tol_grad:
        log.info("Newton from the path maximum stalled at grad %.3g", gn)
    dist = pair_norm(w - base, basis)
    if dist < min_distance:
        raise DegenerateSecondSolutionError(
            f"refined point lies within {dist:.3g} of the cone base"
        )
    diff = basis.synthesize(w - base)
    extra = {
        "distance_to_base": dist,
        "dominates": bool(np.all(diff >= -1e-8)),
        "min_trace_gap": float(np.min(diff)),
        "path_level": path.level,
        "path_steps": path.steps,
        "newton_iterations": it,
    }
    if hasattr(functional, "lam"):
        rec = make_record(w, functional, branch, path.steps + it, tol_grad, tol_res, **extra)
    else:
        rec = _generic_record(w, functional, branch, path.steps + it, tol_grad, **extra)
    return rec


def _generic_record(w, functional, branch, iterations, tol_grad, **extra):
    basis = functional.basis
    g = functional.gradient(w)
    gn = grad_norm(g, basis)
    res = float(np.sum(g * w))
    nsq = pair_norm(w, basis) ** 2
    rec = SolutionRecord(
        field=np.array(w),
        energy=functional.energy(w),
        grad_norm=gn,
        nehari_res=res,
        second_deriv=float(w.ravel() @ functional.hessian(w) @ w.ravel()),
        branch=Branch(branch),
        iterations=iterations,
        converged=bool(gn < tol_grad),
    )
    rec.diagnostics.update(norm_sq=nsq, **extra)
    return rec


def solve_second(w_tilde_record: SolutionRecord, functional, n_nodes: int = 41,
                 max_steps: int = 2000, tol: float = 1e-4, tol_grad: float = 1e-6) -> tuple:
    """Endpoint, path, deformation and refinement in one call.

    Returns ``(record, path)``.
    """
    if not w_tilde_record.converged:
        raise ConfigurationError("the cone base must be a converged record")
    w_tilde = w_tilde_record.field
    basis = functional.basis
    w_bar = build_endpoint(w_tilde, functional)
    path = initial_path(w_tilde, w_bar, functional, n_nodes)
    path = deform(path, functional, max_steps=max_steps, tol=tol)
    E_base = path.energies[0]
    if path.level - E_base < 1e-8:
        z, Ez = _sphere_minimum(functional, w_tilde, w_bar, SPHERE_RADIUS)
        path.diagnostics["sphere_level"] = Ez
        m = path.argmax_index
        path.nodes[m] = z
        path.energies[m] = Ez
        path.mid_energies[m - 1 : m + 1] = -math.inf
    rec = refine_to_critical(path, functional, w_tilde, tol_grad=tol_grad)
    rec.diagnostics["w_bar_scale"] = float(w_bar[0, 0] * math.sqrt(2 * basis.sigma[0]))
    if hasattr(functional, "lam"):
        # constant part of the level split used when the base is degenerate
        rec.diagnostics["level_offset"] = (
            functional.lam / functional.pq * concave_term(w_tilde, functional)
            + exp_moment(w_tilde, functional)
        )
    return rec, path
