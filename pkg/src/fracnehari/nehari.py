"""First solution: minimisation of the energy over the Nehari branch N+."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np
from joblib import Parallel, delayed

from ._descent import canonicalize_positive, newton_critical, sobolev_direction
from .errors import (
    DegenerateFieldError,
    DivergedIterateError,
    NoProjectionError,
    NoSolutionFoundError,
)
from .fibering import concave_term, project_plus, random_direction
from .model import (
    ProblemParams,
    energy,
    grad_norm,
    gradient,
    nehari_residual,
    second_derivative,
)
from .spectral import pair_norm, pair_norm_sq

log = logging.getLogger(__name__)

__all__ = [
    "Branch",
    "SolutionRecord",
    "minimize_nplus",
    "local_min_probe",
    "make_record",
    "is_swap_symmetric",
]


class Branch(str, Enum):
    NEHARI_PLUS = "NehariPlus"
    MOUNTAIN_PASS = "MountainPass"
    SUPERLINEAR = "Superlinear"


@dataclass
class SolutionRecord:
    """A (candidate) critical point with its diagnostics.

    ``grad_norm`` is the dual H^{-1/2} norm of the coefficient gradient and
    ``nehari_res`` is ``<I'(w), w>``.
    """

    field: np.ndarray
    energy: float
    grad_norm: float
    nehari_res: float
    second_deriv: float
    branch: Branch
    iterations: int = 0
    converged: bool = False
    start_index: int = -1
    history: list = field(default_factory=list, repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def norm(self) -> float:
        return float(math.sqrt(max(self.norm_sq, 0.0)))

    @property
    def norm_sq(self) -> float:
        return float(self.diagnostics.get("norm_sq", float("nan")))

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("field")
        d.pop("history")
        d["branch"] = self.branch.value
        d["norm"] = self.norm
        return d


def make_record(w, params: ProblemParams, branch, iterations=0, tol_grad=1e-6, tol_res=1e-8, **extra):
    """Evaluate every diagnostic at ``w`` and decide ``converged``."""
    basis = params.basis
    nsq = pair_norm_sq(w, basis)
    gn = grad_norm(gradient(w, params), basis)
    res = nehari_residual(w, params)
    sd = second_derivative(w, params)
    ok = gn < tol_grad and abs(res) < tol_res * (1 + nsq)
    if branch == Branch.NEHARI_PLUS:
        ok = ok and sd > 0
    rec = SolutionRecord(
        field=np.array(w),
        energy=energy(w, params),
        grad_norm=gn,
        nehari_res=res,
        second_deriv=sd,
        branch=Branch(branch),
        iterations=iterations,
        converged=bool(ok),
    )
    rec.diagnostics.update(norm_sq=nsq, **extra)
    return rec


def is_swap_symmetric(params: ProblemParams) -> bool:
    """Whether exchanging the two components leaves the energy unchanged."""
    return params.p == params.q and params.alpha == params.beta


def _draw_plus_direction(params, rng, symmetric=False, max_tries=100):
    for _ in range(max_tries):
        v = random_direction(params.basis, rng, positive=True)
        if symmetric:
            v = np.vstack([v[0], v[0]])
        if concave_term(v, params) > 0:
            return v
    raise DegenerateFieldError("no direction with B > 0 found")


def _reproject(w, params):
    w = canonicalize_positive(w, params.basis)
    return project_plus(w, params)[0]


def _run_start(params, seed, index, tol_grad, tol_res, max_iter, newton_switch, symmetric):
    rng = np.random.default_rng([seed, index])
    basis = params.basis
    try:
        w = _reproject(_draw_plus_direction(params, rng, symmetric), params)
    except (NoProjectionError, DegenerateFieldError) as exc:
        log.debug("start %d: no initial projection (%s)", index, exc)
        return None
    E = energy(w, params)
    history = [E]
    tau = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        g = gradient(w, params)
        if grad_norm(g, basis) < max(newton_switch * pair_norm(w, basis), tol_grad):
            break
        d = sobolev_direction(g, basis)
        slope = float(np.sum(g * d))
        while tau > 1e-14:
            try:
                trial = _reproject(w + tau * d, params)
                Et = energy(trial, params)
            except (NoProjectionError, DegenerateFieldError, DivergedIterateError):
                tau *= 0.5
                continue
            if Et <= E + 1e-4 * tau * slope:
                break
            tau *= 0.5
        else:
            break
        w, E = trial, Et
        history.append(E)
        tau = min(2 * tau, 8.0)

    try:
        w_new, _, n_newton = newton_critical(
            params, w, tol=0.01 * tol_grad, max_iter=40,
            project=lambda x: _reproject(x, params),
        )
    except (NoProjectionError, DegenerateFieldError, DivergedIterateError):
        w_new, n_newton = w, 0
    E_new = energy(w_new, params)
    if E_new <= E + 1e-12 * (1 + abs(E)):
        w = w_new
        history.append(E_new)
    rec = make_record(w, params, Branch.NEHARI_PLUS, it + n_newton, tol_grad, tol_res)
    rec.start_index = index
    rec.history = history
    return rec


def minimize_nplus(
    params: ProblemParams,
    n_starts: int = 16,
    seed: int = 0,
    tol_grad: float = 1e-6,
    max_iter: int = 10_000,
    tol_res: float = 1e-8,
    lambda0_hat: float | None = None,
    newton_switch: float = 1e-3,
    n_jobs: int | None = None,
    symmetric: bool | None = None,
) -> SolutionRecord:
    """Multistart projected descent on N+ followed by Newton polishing.

    Each start draws a positive direction with ``B > 0`` from
    ``default_rng([seed, index])``, scales it to ``t_plus``, and then takes
    H^{1/2}-preconditioned gradient steps with Armijo backtracking,
    re-projecting onto N+ after every step.  Once the gradient is below
    ``newton_switch * ||w||`` a damped Newton iteration finishes the job.  The
    lowest-energy converged record wins, ties broken by start index.

    With ``symmetric=None`` the starts are drawn on the diagonal ``w1 = w2``
    whenever the problem is swap symmetric.  The descent then stays on the
    diagonal.  Off the diagonal the minimiser pushes one trace onto zero
    where ``f < 0`` while the other stays positive; ``|u|**p |v|**q`` has a
    cusp there and no iterate reaches a small gradient.

    Raises
    ------
    NoSolutionFoundError
        If no start admits a projection onto N+.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    if lambda0_hat is not None and params.lam >= lambda0_hat:
        warnings.warn(
            f"lambda = {params.lam:.4g} >= lambda0_hat = {lambda0_hat:.4g}; N+ may be empty",
            stacklevel=2,
        )
    if symmetric is None:
        symmetric = is_swap_symmetric(params)
    args = (params, seed)
    kw = (tol_grad, tol_res, max_iter, newton_switch, bool(symmetric))
    if n_jobs is None or n_jobs == 1:
        records = [_run_start(*args, i, *kw) for i in range(n_starts)]
    else:
        records = Parallel(n_jobs=n_jobs)(delayed(_run_start)(*args, i, *kw) for i in range(n_starts))
    records = [r for r in records if r is not None]
    if not records:
        raise NoSolutionFoundError(
            f"no start could be projected onto N+ at lambda = {params.lam:.4g}"
        )
    pool = [r for r in records if r.converged] or records
    best = min(pool, key=lambda r: (r.energy, r.start_index))
    best.diagnostics["n_converged_starts"] = sum(r.converged for r in records)
    best.diagnostics["n_starts"] = n_starts
    return best


def local_min_probe(record: SolutionRecord, params: ProblemParams, n_directions: int = 64,
                    radius: float = 1e-3, seed: int = 0) -> bool:
    """Check ``I(w + delta) >= I(w) - 1e-10`` on spheres of three radii.

    Directions are random plus the two radial directions ``+-w``, along
    which an N- point fails immediately.
    """
    if not record.converged:
        raise ValueError("local_min_probe needs a converged record")
    w = record.field
    basis = params.basis
    wn = pair_norm(w, basis)
    if wn == 0:
        raise ValueError("zero field is not an N+ point")
    rng = np.random.default_rng(seed)
    dirs = [w / wn, -w / wn]
    for _ in range(n_directions):
        d = random_direction(basis, rng)
        dirs.append(d / pair_norm(d, basis))
    E0 = energy(w, params)
    for r in (radius, radius / 4, radius / 16):
        for d in dirs:
            if energy(w + r * d, params) < E0 - 1e-10:
                return False
    return True
