"""Benchmark black boxes: Branin-Currin and the four-bar truss (RE21).

Both problems are minimization problems in their raw form. ``evaluate``
negates and min-max normalizes each objective with frozen grid-scan extrema,
so values land in (approximately) ``[0, 1]`` with larger being better and the
named soft/hard bound configurations apply directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from mosh.shf import ShfVectorSpec

DEFAULT_NOISE_SIGMA = 0.01


def branin_raw(X) -> np.ndarray:
    """Branin on ``[0, 1]^2`` (rescaled to ``[-5, 10] x [0, 15]``)."""
    X = np.atleast_2d(X)
    a = 15.0 * X[:, 0] - 5.0
    b = 15.0 * X[:, 1]
    return (
        (b - 5.1 / (4.0 * math.pi**2) * a**2 + 5.0 / math.pi * a - 6.0) ** 2
        + 10.0 * (1.0 - 1.0 / (8.0 * math.pi)) * np.cos(a)
        + 10.0
    )


def currin_raw(X) -> np.ndarray:
    X = np.atleast_2d(X)
    x0, x1 = X[:, 0], X[:, 1]
    safe = np.where(x1 > 0, x1, 1.0)
    # exp(-1 / (2 x1)) -> 0 as x1 -> 0
    factor = np.where(x1 > 0, 1.0 - np.exp(-1.0 / (2.0 * safe)), 1.0)
    num = 2300.0 * x0**3 + 1900.0 * x0**2 + 2092.0 * x0 + 60.0
    den = 100.0 * x0**3 + 500.0 * x0**2 + 4.0 * x0 + 20.0
    return factor * num / den


def branin_currin_raw(X) -> np.ndarray:
    return np.column_stack([branin_raw(X), currin_raw(X)])


# RE21 constants
_TRUSS_F = 10.0
_TRUSS_SIGMA = 10.0
_TRUSS_E = 2.0e5
_TRUSS_L = 200.0
_TRUSS_A = _TRUSS_F / _TRUSS_SIGMA


def four_bar_truss_raw(X) -> np.ndarray:
    """Structural volume and joint displacement, both to be minimized."""
    X = np.atleast_2d(X)
    x1, x2, x3, x4 = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
    r2 = math.sqrt(2.0)
    volume = _TRUSS_L * (2.0 * x1 + r2 * x2 + np.sqrt(x3) + x4)
    displacement = (_TRUSS_F * _TRUSS_L / _TRUSS_E) * (
        2.0 / x1 + 2.0 * r2 / x2 - 2.0 * r2 / x3 + 2.0 / x4
    )
    return np.column_stack([volume, displacement])


@dataclass(frozen=True, eq=False)
class Problem:
    id: str
    lower: np.ndarray
    upper: np.ndarray
    raw: Callable[[np.ndarray], np.ndarray]
    raw_min: np.ndarray  # frozen grid-scan extrema of the raw objectives
    raw_max: np.ndarray
    configurations: dict = field(default_factory=dict)
    noise_sigma: np.ndarray | None = None
    extrema_grid: int = 0  # points per axis used to freeze the extrema

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def n_obj(self) -> int:
        return self.raw_min.size

    @property
    def sigma(self) -> np.ndarray:
        if self.noise_sigma is None:
            return np.full(self.n_obj, DEFAULT_NOISE_SIGMA)
        return np.asarray(self.noise_sigma, dtype=float)

    def in_box(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X >= self.lower) & (X <= self.upper), axis=1)

    def evaluate(self, X) -> np.ndarray:
        """Noiseless normalized maximization objectives; one row per input."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ValueError(f"{self.id} expects {self.dim}-dimensional inputs")
        if not np.all(self.in_box(X)):
            raise ValueError(f"input outside the {self.id} box")
        return (self.raw_max - self.raw(X)) / (self.raw_max - self.raw_min)

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)[0]

    def spec(self, configuration: str, zeta: float = 2.0, beta_slope: float = 0.5) -> ShfVectorSpec:
        try:
            bounds = self.configurations[configuration]
        except KeyError:
            raise KeyError(
                f"unknown configuration {configuration!r} for {self.id}; "
                f"choose from {sorted(self.configurations)}"
            ) from None
        return ShfVectorSpec.from_bounds(bounds, zeta=zeta, beta_slope=beta_slope)

    def with_noise(self, sigma) -> "Problem":
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (self.n_obj,)).copy()
        return Problem(
            self.id, self.lower, self.upper, self.raw, self.raw_min, self.raw_max,
            self.configurations, sigma, self.extrema_grid,
        )


def noisy_wrap(problem: Problem, x, rng: np.random.Generator) -> np.ndarray:
    """One noisy observation ``f(x) + N(0, sigma^2)`` per objective."""
    f = problem(x)
    sigma = problem.sigma
    return f + sigma * rng.standard_normal(f.size)


def grid_extrema(problem: Problem, points_per_axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Raw-objective extrema on a full tensor grid including the box corners."""
    axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in zip(problem.lower, problem.upper)]
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, problem.dim)
    F = problem.raw(G)
    return F.min(axis=0), F.max(axis=0)


# (soft_0, hard_0, soft_1, hard_1), normalized units
BRANIN_CURRIN_CONFIGS = {
    "complete_mid": (0.988, 0.943, 0.856, 0.618),
    "complete_top": (0.969, 0.943, 0.935, 0.618),
    "complete_bot": (0.998, 0.943, 0.697, 0.618),
    "top_mid": (0.969, 0.940, 0.915, 0.856),
    "bot_mid": (0.996, 0.975, 0.737, 0.658),
}

FOUR_BAR_TRUSS_CONFIGS = {
    "narrow_mid": (0.62, 0.45, 0.72, 0.55),
    "narrow_bot": (0.70, 0.45, 0.65, 0.55),
    "narrow_top": (0.55, 0.45, 0.78, 0.55),
    "bot_mid": (0.86, 0.70, 0.48, 0.25),
    "top_mid": (0.43, 0.20, 0.85, 0.70),
}

BRANIN_CURRIN = Problem(
    id="branin_currin",
    lower=np.zeros(2),
    upper=np.ones(2),
    raw=branin_currin_raw,
    # 512 x 512 grid scan
    raw_min=np.array([0.39829076520672047, 1.1804080208620997]),
    raw_max=np.array([308.12909601160663, 13.79869230062591]),
    configurations=BRANIN_CURRIN_CONFIGS,
    extrema_grid=512,
)

FOUR_BAR_TRUSS = Problem(
    id="four_bar_truss",
    lower=np.array([_TRUSS_A, math.sqrt(2.0) * _TRUSS_A, math.sqrt(2.0) * _TRUSS_A, _TRUSS_A]),
    upper=np.full(4, 3.0 * _TRUSS_A),
    raw=four_bar_truss_raw,
    # 20^4 grid scan
    raw_min=np.array([1237.8414230005442, 0.0027614237491539674]),
    raw_max=np.array([2994.9382989376327, 0.05057190958417936]),
    configurations=FOUR_BAR_TRUSS_CONFIGS,
    extrema_grid=20,
)

PROBLEMS = {p.id: p for p in (BRANIN_CURRIN, FOUR_BAR_TRUSS)}


def get_problem(problem_id: str, noise_sigma=None) -> Problem:
    try:
        problem = PROBLEMS[problem_id]
    except KeyError:
        raise KeyError(f"unknown problem {problem_id!r}; choose from {sorted(PROBLEMS)}") from None
    return problem if noise_sigma is None else problem.with_noise(noise_sigma)


def branin_currin(x) -> np.ndarray:
    return BRANIN_CURRIN(x)


def four_bar_truss(x) -> np.ndarray:
    return FOUR_BAR_TRUSS(x)
