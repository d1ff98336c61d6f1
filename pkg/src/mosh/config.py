"""Experiment configuration: one YAML file, every unstated parameter explicit."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from mosh import __version__
from mosh.bench import get_problem
from mosh.dense import METHODS, DenseConfig
from mosh.metrics import DEFAULT_UPSILON
from mosh.scalarize import DEFAULT_GAMMA, LAMBDA_FLOOR
from mosh.shf import ShfVectorSpec
from mosh.surrogate import (
    DEFAULT_NOISE_VARIANCE,
    DEFAULT_REFIT_EVERY,
    JITTER_LADDER,
    LENGTHSCALE_FRACTIONS,
)

SPARSIFIERS = ("saturate", "greedy", "random")
SPARSE_UTILITIES = ("posterior_mean", "observed")
# fields that only pick which artifacts are produced, never their contents
_NOT_HASHED = {"out", "workers", "seeds", "method", "sparsifier", "e2e_methods"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: str = "branin_currin"
    configuration: str = "complete_mid"
    method: str = "mosh_dense"
    sparsifier: str = "saturate"
    T: int = 100
    k: int = 5
    m: int = 100
    upsilon: float = DEFAULT_UPSILON
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4, 5])
    out: str = "runs"
    workers: int = 1
    # Step 1
    n_init: int | None = None
    acq_candidates: int = 1024
    scalarization: str = "augmented_chebyshev"
    gamma: float = DEFAULT_GAMMA
    lambda_floor: float = LAMBDA_FLOOR
    noise_sigma: float = 0.01
    noise_variance: float = DEFAULT_NOISE_VARIANCE
    refit_every: int = DEFAULT_REFIT_EVERY
    lengthscale_grid: list = field(default_factory=lambda: [float(v) for v in LENGTHSCALE_FRACTIONS])
    jitter_ladder: list = field(default_factory=lambda: list(JITTER_LADDER))
    zeta: float = 2.0
    beta_slope: float = 0.5
    shf: list | None = None  # explicit per-objective bounds override `configuration`
    delta: float = 0.1
    grid_cap: int = 10**6
    # Step 2 and evaluation
    sparse_utilities: str = "posterior_mean"
    view_cap: int = 5
    eval_lambdas: int = 100
    oracle_points: int | None = None  # per-dimension default when unset
    oracle_seed: int = 0
    e2e_methods: list = field(default_factory=lambda: ["mosh_dense", "random", "mobo_rs_linear"])

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        try:
            problem = get_problem(self.problem)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        if self.shf is None and self.configuration not in problem.configurations:
            raise ConfigError(
                f"unknown configuration {self.configuration!r} for {self.problem}; "
                f"choose from {sorted(problem.configurations)}"
            )
        for name in [self.method, *self.e2e_methods]:
            if name not in METHODS:
                raise ConfigError(f"unknown method {name!r}; choose from {sorted(METHODS)}")
        if self.sparsifier not in SPARSIFIERS:
            raise ConfigError(f"unknown sparsifier {self.sparsifier!r}; choose from {SPARSIFIERS}")
        if self.sparse_utilities not in SPARSE_UTILITIES:
            raise ConfigError(f"sparse_utilities must be one of {SPARSE_UTILITIES}")
        if self.scalarization not in ("augmented_chebyshev", "linear"):
            raise ConfigError(f"unknown scalarization {self.scalarization!r}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if any(int(s) < 0 for s in self.seeds):
            raise ConfigError("seeds must be nonnegative")
        if self.T < 0 or self.k < 1 or self.m < 1:
            raise ConfigError("need T >= 0, k >= 1, m >= 1")
        if not 0.0 <= self.upsilon <= 1.0:
            raise ConfigError("upsilon must lie in [0, 1]")
        try:
            self.spec()
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"invalid soft-hard bounds: {exc}") from None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    @property
    def manifest_hash(self) -> str:
        payload = {k: v for k, v in self.to_dict().items() if k not in _NOT_HASHED}
        payload["code_version"] = __version__
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def spec(self) -> ShfVectorSpec:
        if self.shf is not None:
            items = [{"zeta": self.zeta, "beta_slope": self.beta_slope, **d} for d in self.shf]
            return ShfVectorSpec.from_list(items)
        return get_problem(self.problem).spec(self.configuration, self.zeta, self.beta_slope)

    def problem_obj(self):
        return get_problem(self.problem, self.noise_sigma)

    def dense_config(self, seed: int) -> DenseConfig:
        problem = self.problem_obj()
        return DenseConfig.for_problem(
            problem,
            self.spec(),
            T=self.T,
            n_init=self.n_init,
            acq_candidates=self.acq_candidates,
            scalarization=self.scalarization,
            gamma=self.gamma,
            lambda_floor=self.lambda_floor,
            noise_variance=self.noise_variance,
            refit_every=self.refit_every,
            lengthscale_grid=tuple(self.lengthscale_grid),
            jitter_ladder=tuple(self.jitter_ladder),
            seed=int(seed),
        )
