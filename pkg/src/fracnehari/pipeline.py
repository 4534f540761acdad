"""Two-solution pipeline shared by the CLI and the estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DegenerateFieldError, FracNehariError, NoSolutionFoundError
from .model import ProblemParams
from .mountain_pass import solve_second
from .nehari import SolutionRecord, minimize_nplus
from .spectral import pair_norm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_LEVEL = 4

LEVEL_MARGIN = 1e-3


@dataclass
class TwoSolutionResult:
    lam: float
    first: SolutionRecord | None = None
    second: SolutionRecord | None = None
    level: float | None = None
    errors: list = field(default_factory=list)
    path_history: list = field(default_factory=list, repr=False)
    basis: object = field(default=None, repr=False)

    @property
    def gap(self) -> float | None:
        if self.first is None or self.second is None:
            return None
        return pair_norm(self.second.field - self.first.field, self.basis)

    @property
    def n_solutions(self) -> int:
        return sum(r is not None and r.converged for r in (self.first, self.second))

    @property
    def level_ok(self) -> bool | None:
        if self.level is None or self.first is None:
            return None
        return self.first.energy <= self.level < self.first.energy + math.pi / 2 - LEVEL_MARGIN

    @property
    def status(self) -> str:
        if self.level_ok is False:
            return "level_violation"
        return {0: "zero_solutions", 1: "one_solution", 2: "two_solutions"}[self.n_solutions]

    @property
    def exit_code(self) -> int:
        if self.level_ok is False:
            return EXIT_LEVEL
        return EXIT_OK if self.n_solutions == 2 else EXIT_NONCONVERGED

    def row(self) -> dict:
        f, s = self.first, self.second
        return {
            "lambda": self.lam,
            "theta": None if f is None else f.energy,
            "rho": self.level,
            "second_energy": None if s is None else s.energy,
            "norm_first": None if f is None else f.norm,
            "norm_second": None if s is None else s.norm,
            "gap": self.gap,
            "converged_first": bool(f is not None and f.converged),
            "converged_second": bool(s is not None and s.converged),
            "dominates": None if s is None else s.diagnostics.get("dominates"),
            "status": self.status,
        }


def run_two_solutions(params: ProblemParams, n_starts: int = 16, seed: int = 0,
                      tol_grad: float = 1e-6, tol_res: float = 1e-8, tol_res_second: float = 1e-6,
                      max_iter: int = 10_000, path_nodes: int = 41, deform_max_steps: int = 2000,
                      deform_tol: float = 1e-4, lambda0_hat: float | None = None,
                      n_jobs: int | None = None) -> TwoSolutionResult:
    """N+ minimiser, then the cone mountain pass above it.

    Stage failures are collected in ``errors`` as ``{"stage", "error",
    "message"}`` entries instead of being raised.
    """
    out = TwoSolutionResult(params.lam, basis=params.basis)
    try:
        out.first = minimize_nplus(params, n_starts=n_starts, seed=seed, tol_grad=tol_grad,
                                   max_iter=max_iter, tol_res=tol_res,
                                   lambda0_hat=lambda0_hat, n_jobs=n_jobs)
    except (NoSolutionFoundError, DegenerateFieldError) as exc:
        out.errors.append(_err("minimize_nplus", exc))
        return out
    if not out.first.converged:
        out.errors.append({"stage": "minimize_nplus", "error": "NotConverged",
                           "message": f"grad_norm {out.first.grad_norm:.3g}"})
        return out
    try:
        rec, path = solve_second(out.first, params, n_nodes=path_nodes, max_steps=deform_max_steps,
                                 tol=deform_tol, tol_grad=tol_grad)
    except FracNehariError as exc:
        # degenerate second solution, torn path or overflow
        out.errors.append(_err("mountain_pass", exc))
        return out
    # the second record uses the looser residual tolerance of the pipeline
    nsq = rec.norm_sq
    rec.converged = bool(rec.grad_norm < tol_grad and abs(rec.nehari_res) < tol_res_second * (1 + nsq))
    out.second = rec
    out.level = path.level
    out.path_history = list(path.history)
    if not rec.converged:
        out.errors.append({"stage": "refine_to_critical", "error": "NotConverged",
                           "message": f"grad_norm {rec.grad_norm:.3g}"})
    return out


def _err(stage, exc):
    return {"stage": stage, "error": type(exc).__name__, "message": str(exc)}
