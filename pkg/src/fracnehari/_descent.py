"""Preconditioned descent and Newton polishing shared by the solvers.

A *functional* is any object with ``energy(w)``, ``gradient(w)``,
``hessian(w)`` and a ``basis`` attribute.  Gradients are coefficient
covectors; the Riesz map of the H^{1/2} inner product divides by ``sigma``.
"""
from __future__ import annotations

import numpy as np

from .errors import DivergedIterateError
from .model import grad_norm


def sobolev_direction(g, basis):
    return -np.asarray(g) / basis.sigma


def canonicalize_positive(w, basis):
    """Replace both traces by their absolute values."""
    return basis.analyze(np.abs(basis.synthesize(w)))


def newton_step(functional, w, g=None):
    if g is None:
        g = functional.gradient(w)
    H = functional.hessian(w)
    try:
        d = np.linalg.solve(H, -g.ravel())
    except np.linalg.LinAlgError:
        d = np.linalg.lstsq(H, -g.ravel(), rcond=None)[0]
    return d.reshape(w.shape)


def newton_critical(functional, w, tol=1e-10, max_iter=50, project=None):
    """Damped Newton iteration for ``gradient(w) = 0``.

    The merit function is the dual norm of the gradient, for which the
    Newton direction is a descent direction whatever the Hessian's inertia,
    so the same routine polishes minima and saddles.  ``project`` is applied
    after every step (cone or Nehari reprojection).

    Returns ``(w, grad_norm, iterations)``.
    """
    basis = functional.basis
    g = functional.gradient(w)
    gn = grad_norm(g, basis)
    it = 0
    for it in range(1, max_iter + 1):
        if gn < tol:
            return w, gn, it - 1
        d = newton_step(functional, w, g)
        step = 1.0
        accepted = False
        while step > 1e-6:
            trial = w + step * d
            if project is not None:
                trial = project(trial)
            try:
                gt = functional.gradient(trial)
            except DivergedIterateError:
                step *= 0.5
                continue
            gnt = grad_norm(gt, basis)
            if gnt < (1 - 1e-4 * step) * gn:
                w, g, gn = trial, gt, gnt
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return w, gn, it
