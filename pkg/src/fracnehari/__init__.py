"""Spectral variational solvers for half-Laplacian elliptic systems on (-1, 1).

Concave-convex systems with exponential nonlinearity: Nehari-manifold
minimisation, cone mountain passes, fibering analysis, Moser-type
concentration and a superlinear mountain-pass solver.
"""
from .errors import (
    ConfigurationError,
    DegenerateFieldError,
    DegenerateSecondSolutionError,
    DivergedIterateError,
    FracNehariError,
    HypothesisFailure,
    InconsistentStateError,
    LevelViolationError,
    NoProjectionError,
    NontrivialityError,
    NoSolutionFoundError,
    ResolutionError,
)
from .estimators import NehariMinimizer, SuperlinearSolver, TwoSolutionSolver
from .fibering import (
    FiberingProfile,
    Lambda0Estimate,
    find_tstar,
    lambda0_estimate,
    n0_probe,
    project,
    project_minus,
    project_plus,
    psi_eval,
)
from .model import (
    NonlinearitySpec,
    ProblemParams,
    energy,
    grad_norm,
    gradient,
    hessian,
    nehari_residual,
    second_derivative,
)
from .moser import MoserFamily, moser_family, moser_trace, mt_functional, mt_sup_harness
from .mountain_pass import PathState, build_endpoint, cone_project, deform, refine_to_critical
from .nehari import Branch, SolutionRecord, local_min_probe, minimize_nplus
from .pipeline import TwoSolutionResult, run_two_solutions
from .spectral import (
    QuadratureGrid,
    SpectralBasis,
    build_basis,
    build_sine_basis,
    extension_energy,
    pair_norm,
    pair_norm_sq,
)
from .superlinear import (
    SuperlinearModel,
    SuperlinearProblem,
    default_model,
    hypothesis_check,
    mp_solve,
)

__version__ = "0.1.0"
