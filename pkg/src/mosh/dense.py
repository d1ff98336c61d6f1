"""Step 1: dense Pareto-frontier sampling.

``mosh_dense`` runs random-scalarization Bayesian optimization where the
per-objective UCB values pass through the soft-hard utility map before being
scalarized. The Step-1 baselines (uniform random sampling, the linear MOBO-RS
variant and the discretized greedy solver) share the archive format and the
initial design.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from mosh.bench import Problem, noisy_wrap
from mosh.scalarize import (
    DEFAULT_GAMMA,
    LAMBDA_FLOOR,
    ChebyshevParams,
    WeightVector,
    sample_lambda,
    scalarize_matrix,
)
from mosh.seeding import stream
from mosh.shf import NEG_INF, ShfVectorSpec, normalize, shf_eval_vector, shf_transform
from mosh.surrogate import (
    DEFAULT_NOISE_VARIANCE,
    DEFAULT_REFIT_EVERY,
    JITTER_LADDER,
    LENGTHSCALE_FRACTIONS,
    GpState,
    gp_condition,
    gp_init,
    gp_posterior,
    gp_update,
)

log = logging.getLogger(__name__)

Oracle = Callable[[np.ndarray, int], np.ndarray]

TOP_POINTS = 5
JITTERS_PER_POINT = 8
JITTER_SCALE = 0.02
DEFAULT_GRID_CAP = 10**6


class DenseRunError(RuntimeError):
    """The black box failed mid-run; ``archive`` holds everything gathered so far."""

    def __init__(self, message: str, archive: "SampleArchive"):
        super().__init__(message)
        self.archive = archive


# ---------------------------------------------------------------- archive


@dataclass(frozen=True, eq=False)
class Record:
    t: int
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    lam: tuple | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "t": self.t,
                "x": [float(v) for v in self.x],
                "y": [float(v) for v in self.y],
                "u": [float(v) if math.isfinite(v) else None for v in self.u],
                "lambda": None if self.lam is None else [float(v) for v in self.lam],
            }
        )

    @classmethod
    def from_dict(cls, d: dict) -> "Record":
        return cls(
            t=int(d["t"]),
            x=np.asarray(d["x"], dtype=float),
            y=np.asarray(d["y"], dtype=float),
            u=np.array([NEG_INF if v is None else float(v) for v in d["u"]]),
            lam=None if d.get("lambda") is None else tuple(float(v) for v in d["lambda"]),
        )


@dataclass(eq=False)
class SampleArchive:
    rng_seed: int
    records: list[Record] = field(default_factory=list)
    header: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def __len__(self) -> int:
        return len(self.records)

    @property
    def X(self) -> np.ndarray:
        return np.array([r.x for r in self.records])

    @property
    def Y(self) -> np.ndarray:
        return np.array([r.y for r in self.records])

    @property
    def U(self) -> np.ndarray:
        return np.array([r.u for r in self.records])

    def append(self, record: Record, sink=None) -> None:
        expected = len(self.records) + 1
        if record.t != expected:
            raise ValueError(f"record t={record.t} breaks contiguity (expected {expected})")
        self.records.append(record)
        if sink is not None:
            sink.write(record.to_json() + "\n")
            sink.flush()

    def prefix(self, n: int) -> "SampleArchive":
        return SampleArchive(self.rng_seed, self.records[:n], dict(self.header), self.wall_time)

    def header_line(self) -> str:
        return json.dumps({"header": {"seed": self.rng_seed, **self.header}}, sort_keys=True)

    def write_jsonl(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            fh.write(self.header_line() + "\n")
            for r in self.records:
                fh.write(r.to_json() + "\n")

    @classmethod
    def read_jsonl(cls, path) -> "SampleArchive":
        header: dict = {}
        records = []
        with Path(path).open() as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                d = json.loads(line)
                if "header" in d:
                    header = d["header"]
                    continue
                records.append(Record.from_dict(d))
        seed = int(header.pop("seed", 0))
        return cls(seed, records, header)


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class DenseConfig:
    spec: ShfVectorSpec
    lower: tuple
    upper: tuple
    T: int = 100
    n_init: int | None = None
    acq_candidates: int = 1024
    scalarization: str = "augmented_chebyshev"
    gamma: float = DEFAULT_GAMMA
    lambda_floor: float = LAMBDA_FLOOR
    use_shf: bool = True
    noise_variance: float = DEFAULT_NOISE_VARIANCE
    refit_every: int = DEFAULT_REFIT_EVERY
    lengthscale_grid: tuple = LENGTHSCALE_FRACTIONS
    jitter_ladder: tuple = JITTER_LADDER
    seed: int = 0
    problem: str = ""

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if self.n_init is not None and self.n_init < 2:
            raise ValueError("n_init must be at least 2")
        if self.acq_candidates < 1:
            raise ValueError("acq_candidates must be positive")

    @classmethod
    def for_problem(cls, problem: Problem, spec: ShfVectorSpec, **kw) -> "DenseConfig":
        return cls(spec=spec, lower=tuple(problem.lower), upper=tuple(problem.upper), problem=problem.id, **kw)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def initial_samples(self) -> int:
        return self.n_init if self.n_init is not None else 2 * (self.dim + 1)

    @property
    def box(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.lower), np.array(self.upper)

    def chebyshev(self) -> ChebyshevParams:
        return ChebyshevParams.for_spec(self.spec, self.gamma)


class NoisyOracle:
    """Problem evaluation plus Gaussian noise drawn from ``(seed, 'noise', t)``."""

    def __init__(self, problem: Problem, seed: int):
        self.problem = problem
        self.seed = seed

    def __call__(self, x, t: int) -> np.ndarray:
        return noisy_wrap(self.problem, x, stream(self.seed, "noise", t))


# ---------------------------------------------------------------- acquisition


def beta_schedule(t: int) -> float:
    if t < 1:
        raise ValueError("beta_schedule is defined for t >= 1")
    return math.sqrt(0.125 * math.log(2.0 * t + 1.0))


def ucb(gp_states: Sequence[GpState], X, t: int) -> np.ndarray:
    """Optimistic per-objective values ``mu + sqrt(beta_t) * sigma``, shape ``(n, L)``."""
    scale = math.sqrt(beta_schedule(t))
    cols = []
    for s in gp_states:
        post = gp_posterior(s, X)
        cols.append(post.mean + scale * post.stddev)
    return np.column_stack(cols)


def _utilities(phi: np.ndarray, config: DenseConfig) -> np.ndarray:
    return shf_transform(phi, config.spec) if config.use_shf else phi


def acquisition_values(gp_states, lam, X, t: int, config: DenseConfig) -> np.ndarray:
    phi = ucb(gp_states, X, t)
    U = _utilities(phi, config)
    return scalarize_matrix(U, [lam], config.scalarization, config.chebyshev())[:, 0]


def acquisition(gp_states, lam, x, t: int, config: DenseConfig) -> float:
    return float(acquisition_values(gp_states, lam, np.atleast_2d(x), t, config)[0])


def _fallback_values(gp_states, lam, X, t: int, config: DenseConfig) -> np.ndarray:
    # linear utility with each -inf replaced by -10 L plus the hard-segment
    # extension 2*z (negative below the hard bound) so candidates still rank
    phi = ucb(gp_states, X, t)
    U = _utilities(phi, config)
    L = U.shape[1]
    for j, s in enumerate(config.spec):
        bad = ~np.isfinite(U[:, j])
        U[bad, j] = -10.0 * L + 2.0 * normalize(phi[bad, j], s)
    w = lam.as_array() if isinstance(lam, WeightVector) else np.asarray(lam)
    return U @ w


def candidate_pool(config: DenseConfig, rng: np.random.Generator, anchors: np.ndarray | None = None) -> np.ndarray:
    """Scrambled Halton points plus Gaussian jitters around ``anchors``."""
    lower, upper = config.box
    halton = qmc.Halton(d=config.dim, scramble=True, seed=rng)
    pool = lower + halton.random(config.acq_candidates) * (upper - lower)
    if anchors is not None and len(anchors):
        noise = rng.standard_normal((len(anchors), JITTERS_PER_POINT, config.dim))
        jit = anchors[:, None, :] + JITTER_SCALE * (upper - lower) * noise
        pool = np.vstack([pool, np.clip(jit.reshape(-1, config.dim), lower, upper)])
    return pool


def argmax_first(values: np.ndarray) -> int:
    """Index of the maximum; ties go to the lowest index."""
    return int(np.argmax(values))


def maximize_acquisition(gp_states, lam, t: int, config: DenseConfig, rng: np.random.Generator, archive_X=None, pool=None) -> np.ndarray:
    if pool is None:
        anchors = None
        if archive_X is not None and len(archive_X):
            archive_X = np.atleast_2d(archive_X)
            scores = acquisition_values(gp_states, lam, archive_X, t, config)
            top = np.argsort(-scores, kind="stable")[:TOP_POINTS]
            anchors = archive_X[top]
        pool = candidate_pool(config, rng, anchors)
    pool = np.atleast_2d(pool)
    values = acquisition_values(gp_states, lam, pool, t, config)
    if not np.any(np.isfinite(values)):
        values = _fallback_values(gp_states, lam, pool, t, config)
    return pool[argmax_first(values)].copy()


# ---------------------------------------------------------------- runs


def _fresh_gps(config: DenseConfig) -> list[GpState]:
    lower, upper = config.box
    return [
        gp_init(
            lower,
            upper,
            noise_variance=config.noise_variance,
            refit_every=config.refit_every,
            lengthscale_grid=config.lengthscale_grid,
            jitter_ladder=config.jitter_ladder,
        )
        for _ in range(len(config.spec))
    ]


def replay_gps(config: DenseConfig, records: Sequence[Record]) -> list[GpState]:
    """GP states after the warm-up batch and each later record, in order."""
    states = _fresh_gps(config)
    n0 = min(config.initial_samples, len(records))
    if n0:
        X0 = np.array([r.x for r in records[:n0]])
        Y0 = np.array([r.y for r in records[:n0]])
        states = [gp_condition(s, X0, Y0[:, j]) for j, s in enumerate(states)]
    for r in records[n0:]:
        states = [gp_update(s, r.x, r.y[j]) for j, s in enumerate(states)]
    return states


def initial_design(config: DenseConfig) -> np.ndarray:
    lower, upper = config.box
    halton = qmc.Halton(d=config.dim, scramble=True, seed=stream(config.seed, "init"))
    return lower + halton.random(config.initial_samples) * (upper - lower)


def _make_record(t, x, y, spec, lam=None) -> Record:
    y = np.asarray(y, dtype=float)
    return Record(t=t, x=np.asarray(x, dtype=float), y=y, u=shf_eval_vector(y, spec),
                  lam=None if lam is None else tuple(lam.weights))


def _evaluate(oracle: Oracle, x, t: int, archive: SampleArchive) -> np.ndarray:
    try:
        y = np.asarray(oracle(x, t), dtype=float)
    except Exception as exc:
        raise DenseRunError(f"oracle failed at t={t}, x={list(x)}: {exc}", archive) from exc
    if not np.all(np.isfinite(y)):
        raise DenseRunError(f"oracle returned non-finite values at t={t}: {y}", archive)
    return y


class _Run:
    """Shared bookkeeping: resume, persistence, warm-up."""

    def __init__(self, config: DenseConfig, oracle: Oracle, archive_path=None, header=None):
        self.config = config
        self.oracle = oracle
        self.archive = SampleArchive(config.seed, header=dict(header or {}))
        self.path = Path(archive_path) if archive_path is not None else None
        self.sink = None
        if self.path is not None and self.path.exists():
            previous = SampleArchive.read_jsonl(self.path)
            if previous.rng_seed != config.seed:
                raise ValueError(f"{self.path} was produced with seed {previous.rng_seed}")
            self.archive.records = previous.records
            log.info("resuming %s from %d records", self.path, len(previous))
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.archive.write_jsonl(self.path)
            self.sink = self.path.open("a")

    def close(self):
        if self.sink is not None:
            self.sink.close()

    def done(self, t: int) -> bool:
        return t <= len(self.archive)

    def add(self, t, x, lam=None) -> Record:
        y = _evaluate(self.oracle, x, t, self.archive)
        rec = _make_record(t, x, y, self.config.spec, lam)
        self.archive.append(rec, self.sink)
        return rec

    def warm_up(self) -> None:
        for i, x in enumerate(initial_design(self.config), start=1):
            if not self.done(i):
                self.add(i, x)


def mosh_dense(config: DenseConfig, oracle: Oracle, archive_path=None, header=None) -> SampleArchive:
    """Random-scalarization BO over soft-hard utilities; returns the dense set."""
    start = time.perf_counter()
    run = _Run(config, oracle, archive_path, header)
    try:
        run.warm_up()
        n0 = config.initial_samples
        states = replay_gps(config, run.archive.records)
        for it in range(1, config.T + 1):
            t = n0 + it
            if run.done(t):
                continue
            lam = sample_lambda(config.spec, stream(config.seed, "lambda", it), config.lambda_floor)
            x = maximize_acquisition(
                states, lam, it, config, stream(config.seed, "acquisition", it), run.archive.X
            )
            rec = run.add(t, x, lam)
            states = [gp_update(s, rec.x, rec.y[j]) for j, s in enumerate(states)]
    finally:
        run.close()
    run.archive.wall_time = time.perf_counter() - start
    return run.archive


def mobo_rs_linear(config: DenseConfig, oracle: Oracle, archive_path=None, header=None) -> SampleArchive:
    """MOBO-RS baseline: linear scalarization of the raw UCB vector (no SHF)."""
    cfg = replace(config, scalarization="linear", use_shf=False)
    return mosh_dense(cfg, oracle, archive_path, header)


def random_sampling_baseline(config: DenseConfig, oracle: Oracle, archive_path=None, header=None) -> SampleArchive:
    start = time.perf_counter()
    run = _Run(config, oracle, archive_path, header)
    lower, upper = config.box
    try:
        run.warm_up()
        n0 = config.initial_samples
        for it in range(1, config.T + 1):
            t = n0 + it
            if run.done(t):
                continue
            x = lower + stream(config.seed, "random_baseline", it).random(config.dim) * (upper - lower)
            run.add(t, x)
    finally:
        run.close()
    run.archive.wall_time = time.perf_counter() - start
    return run.archive


# ---------------------------------------------------------------- discrete greedy


def _axis_points(lo: float, hi: float, delta: float) -> np.ndarray:
    n = max(1, math.ceil((hi - lo) / delta - 1e-12))
    if n == 1:
        return np.array([(lo + hi) / 2.0])
    return np.linspace(lo, hi, n)


def grid_size(lower, upper, delta: float) -> int:
    return math.prod(max(1, math.ceil((hi - lo) / delta - 1e-12)) for lo, hi in zip(lower, upper))


def discretize_box(lower, upper, delta: float, cap: int = DEFAULT_GRID_CAP) -> np.ndarray:
    """``prod ceil(width / delta)`` evenly spaced points spanning the box."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    size = grid_size(lower, upper, delta)
    if size > cap:
        raise ValueError(f"discretized grid has {size} points, above the cap of {cap}")
    axes = [_axis_points(lo, hi, delta) for lo, hi in zip(lower, upper)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


def discretize_simplex(n_obj: int, delta: float) -> list[WeightVector]:
    """Points of the same per-axis grid on ``[0, 1]^L`` that sum to one."""
    n = max(1, math.ceil(1.0 / delta - 1e-12))
    if n == 1:
        return [WeightVector(tuple([1.0 / n_obj] * n_obj))]
    steps = n - 1
    out = []
    for idx in itertools.product(range(n), repeat=n_obj):
        if sum(idx) == steps:
            w = np.array(idx, dtype=float) / steps
            w[-1] = 1.0 - w[:-1].sum()
            out.append(WeightVector(tuple(w)))
    return out


def _coverage(S: np.ndarray, s_min: np.ndarray, s_max: np.ndarray) -> np.ndarray:
    span = np.where(s_max > s_min, s_max - s_min, 1.0)
    F = (S - s_min) / span
    return np.where(np.isfinite(F), np.maximum(F, 0.0), 0.0)


def discrete_greedy_baseline(config: DenseConfig, oracle: Oracle, delta: float, archive_path=None, header=None, grid_cap: int = DEFAULT_GRID_CAP) -> SampleArchive:
    """Greedy max-min utility-ratio growth over a discretized box and simplex.

    The black box is only queried at chosen grid points; candidate values come
    from the GP UCB over the whole grid. Ties on the worst-case ratio fall back
    to the mean ratio over the weight grid, then to the lowest grid index.
    """
    start = time.perf_counter()
    lower, upper = config.box
    grid = discretize_box(lower, upper, delta, grid_cap)
    lambdas = discretize_simplex(len(config.spec), delta)
    params = config.chebyshev()
    run = _Run(config, oracle, archive_path, header)
    try:
        run.warm_up()
        n0 = config.initial_samples
        states = replay_gps(config, run.archive.records)
        used = np.zeros(len(grid), dtype=bool)
        for r in run.archive.records[n0:]:
            used |= np.all(grid == r.x, axis=1)
        for it in range(1, config.T + 1):
            t = n0 + it
            if run.done(t):
                continue
            if used.all():
                log.warning("discrete grid exhausted after %d iterations", it - 1)
                break
            U_grid = _utilities(ucb(states, grid, it), config)
            S_grid = scalarize_matrix(U_grid, lambdas, config.scalarization, params)
            S_arch = scalarize_matrix(run.archive.U, lambdas, config.scalarization, params)
            finite = np.where(np.isfinite(S_grid), S_grid, np.inf)
            s_min = np.min(finite, axis=0)
            s_min = np.where(np.isfinite(s_min), s_min, 0.0)
            s_max = np.max(S_grid, axis=0)
            s_max = np.where(np.isfinite(s_max), s_max, s_min + 1.0)
            current = _coverage(S_arch, s_min, s_max).max(axis=0)
            cand = np.maximum(_coverage(S_grid, s_min, s_max), current)
            worst = cand.min(axis=1)
            mean = cand.mean(axis=1)
            worst[used] = -np.inf
            best = np.flatnonzero(worst == worst.max())
            pick = int(best[np.argmax(mean[best])])
            used[pick] = True
            binding = lambdas[int(np.argmin(cand[pick]))]
            rec = run.add(t, grid[pick], binding)
            states = [gp_update(s, rec.x, rec.y[j]) for j, s in enumerate(states)]
    finally:
        run.close()
    run.archive.wall_time = time.perf_counter() - start
    return run.archive


METHODS = {
    "mosh_dense": mosh_dense,
    "random": random_sampling_baseline,
    "mobo_rs_linear": mobo_rs_linear,
    "discrete_greedy": discrete_greedy_baseline,
}
