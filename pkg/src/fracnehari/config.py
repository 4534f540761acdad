"""JSON experiment configuration."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigurationError
from .model import ProblemParams
from .spectral import SpectralBasis, build_basis

SCHEMA_VERSION = 1


@dataclass
class ParamsConfig:
    lam: float | None = None  # None: lambda_factor * lambda0_hat
    lambda_factor: float = 0.5
    p: float = 0.75
    q: float = 0.75
    alpha: float = 1.5
    beta: float = 1.5
    eps: float = 1e-8
    weight_scale: float = 1.0  # f = scale * cos(pi x) + shift
    weight_shift: float = 0.0


@dataclass
class BasisConfig:
    K: int = 128
    panels: int = 16
    degree: int = 64


@dataclass
class SolverConfig:
    n_starts: int = 16
    tol_grad: float = 1e-6
    tol_res: float = 1e-8
    tol_res_second: float = 1e-6
    max_iter: int = 10_000
    path_nodes: int = 41
    deform_max_steps: int = 2000
    deform_tol: float = 1e-4


@dataclass
class Lambda0Config:
    n_samples: int = 64
    r: float | None = None


@dataclass
class SweepConfig:
    lambdas: list | None = None
    start: float = 1e-4
    stop_factor: float = 0.9  # stop = stop_factor * lambda0_hat
    num: int = 10


@dataclass
class MoserConfig:
    k_values: list = field(default_factory=lambda: [2**j for j in range(4, 13)])
    a_factors: list = field(default_factory=lambda: [0.5, 1.0, 1.1])
    n_samples: int = 32
    modes_per_k: int = 32


@dataclass
class SuperlinearConfig:
    model: str = "default"  # default | quadratic | lambda1_quadratic
    rho: float = 0.1
    n_probe: int = 64


_SECTIONS = {
    "params": ParamsConfig,
    "basis": BasisConfig,
    "solver": SolverConfig,
    "lambda0": Lambda0Config,
    "sweep": SweepConfig,
    "moser": MoserConfig,
    "superlinear": SuperlinearConfig,
}


@dataclass
class ExperimentConfig:
    params: ParamsConfig = field(default_factory=ParamsConfig)
    basis: BasisConfig = field(default_factory=BasisConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    lambda0: Lambda0Config = field(default_factory=Lambda0Config)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    moser: MoserConfig = field(default_factory=MoserConfig)
    superlinear: SuperlinearConfig = field(default_factory=SuperlinearConfig)
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d.pop("schema_version", None)
        kw = {}
        for name, sec_cls in _SECTIONS.items():
            sec = d.pop(name, {}) or {}
            if not isinstance(sec, dict):
                raise ConfigurationError(f"section '{name}' must be an object")
            known = {f.name for f in fields(sec_cls)}
            unknown = set(sec) - known
            if unknown:
                raise ConfigurationError(f"unknown keys in '{name}': {sorted(unknown)}")
            kw[name] = sec_cls(**sec)
        if "seed" in d:
            kw["seed"] = d.pop("seed")
        if d:
            raise ConfigurationError(f"unknown top-level keys: {sorted(d)}")
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION}
        out.update(asdict(self))
        return out

    def validate(self):
        s = self.solver
        for name in ("tol_grad", "tol_res", "tol_res_second", "deform_tol"):
            if not getattr(s, name) > 0:
                raise ConfigurationError(f"solver.{name} must be positive")
        for name in ("n_starts", "max_iter", "deform_max_steps"):
            if getattr(s, name) < 1:
                raise ConfigurationError(f"solver.{name} must be >= 1")
        if s.path_nodes < 3:
            raise ConfigurationError("solver.path_nodes must be >= 3")
        p = self.params
        if p.lam is not None and not p.lam > 0:
            raise ConfigurationError("params.lam must be positive or null")
        if not p.lambda_factor > 0:
            raise ConfigurationError("params.lambda_factor must be positive")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigurationError("seed must be a nonnegative integer")
        if self.lambda0.n_samples < 1:
            raise ConfigurationError("lambda0.n_samples must be >= 1")
        if self.superlinear.model not in ("default", "quadratic", "lambda1_quadratic"):
            raise ConfigurationError(f"unknown superlinear model '{self.superlinear.model}'")

    # builders ------------------------------------------------------------

    def build_basis(self) -> SpectralBasis:
        b = self.basis
        return build_basis(b.K, b.panels, b.degree)

    def build_params(self, basis: SpectralBasis, lam: float) -> ProblemParams:
        p = self.params
        f = p.weight_scale * np.cos(np.pi * basis.nodes) + p.weight_shift
        return ProblemParams(
            lam=float(lam), basis=basis, p=p.p, q=p.q, alpha=p.alpha, beta=p.beta,
            weight_values=f, eps=p.eps,
        )

    def sweep_lambdas(self, lambda0_hat: float) -> list:
        sw = self.sweep
        if sw.lambdas is not None:
            lams = sorted(float(x) for x in sw.lambdas)
        else:
            if sw.num < 1:
                raise ConfigurationError("sweep.num must be >= 1")
            stop = sw.stop_factor * lambda0_hat
            lams = list(np.geomspace(sw.start, stop, sw.num)) if sw.num > 1 else [sw.start]
        if not lams:
            raise ConfigurationError("sweep needs at least one lambda")
        if any(not (x > 0 and math.isfinite(x)) for x in lams):
            raise ConfigurationError("sweep lambdas must be positive and finite")
        return [float(x) for x in lams]
