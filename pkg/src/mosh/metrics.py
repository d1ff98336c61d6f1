"""Soft-hard evaluation metrics and the offline reference set they use."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import qmc

from mosh.bench import Problem
from mosh.pareto import hypervolume, nondominated_mask
from mosh.scalarize import ChebyshevParams, scalarize_matrix
from mosh.seeding import stream
from mosh.shf import ShfVectorSpec, shf_transform

log = logging.getLogger(__name__)

DEFAULT_UPSILON = 0.75
DISTANCE_FLOOR = 1e-9
ORACLE_POINTS = 10_000  # 100 x 100 tensor grid for d <= 2
ORACLE_POINTS_HIGH_DIM = 2**16  # scrambled Halton points for d > 2


class EmptyRegionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RegionSets:
    soft: np.ndarray  # r_S, lower corner of A_S
    hard: np.ndarray  # r_H, lower corner of A_H

    @classmethod
    def from_spec(cls, spec: ShfVectorSpec) -> "RegionSets":
        return cls(spec.alpha_soft, spec.alpha_hard)

    def in_soft(self, Y) -> np.ndarray:
        return np.all(np.atleast_2d(Y) >= self.soft, axis=1)

    def in_hard(self, Y) -> np.ndarray:
        return np.all(np.atleast_2d(Y) >= self.hard, axis=1)


def _as_points(C, n_obj: int) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    return C.reshape(-1, n_obj) if C.size else np.empty((0, n_obj))


# ---------------------------------------------------------------- offline oracle


@dataclass(frozen=True, eq=False)
class OfflineOracle:
    """A fixed evaluation grid of one problem, kept constant across runs.

    ``objectives`` holds every grid evaluation; ``front`` its nondominated
    subset, which is the reference set for the fill distance.
    """

    problem: str
    objectives: np.ndarray
    front: np.ndarray
    seed: int = 0

    def region_front(self, regions: RegionSets, which: str) -> np.ndarray:
        mask = regions.in_soft(self.front) if which == "soft" else regions.in_hard(self.front)
        return self.front[mask]

    def check_regions(self, regions: RegionSets) -> None:
        for which in ("soft", "hard"):
            if len(self.region_front(regions, which)) == 0:
                raise EmptyRegionError(f"offline front of {self.problem} has no point in the {which} region")

    def to_json(self) -> str:
        return json.dumps(
            {
                "problem": self.problem,
                "seed": self.seed,
                "objectives": self.objectives.tolist(),
                "front": self.front.tolist(),
            }
        )

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "OfflineOracle":
        d = json.loads(Path(path).read_text())
        return cls(d["problem"], np.asarray(d["objectives"]), np.asarray(d["front"]), int(d.get("seed", 0)))


def oracle_size(problem: Problem, n_points: int | None = None) -> int:
    """Number of grid points actually evaluated for ``n_points``."""
    if problem.dim <= 2:
        per_axis = int(round((n_points or ORACLE_POINTS) ** (1.0 / problem.dim)))
        return per_axis**problem.dim
    return n_points or ORACLE_POINTS_HIGH_DIM


def oracle_inputs(problem: Problem, n_points: int | None = None, seed: int = 0) -> np.ndarray:
    """Uniform tensor grid for ``d <= 2``, scrambled Halton points otherwise.

    ``None`` picks the per-dimension default. Thin soft regions in four
    dimensions need the larger Halton set to hold any front point at all.
    """
    if problem.dim <= 2:
        per_axis = int(round((n_points or ORACLE_POINTS) ** (1.0 / problem.dim)))
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(problem.lower, problem.upper)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, problem.dim)
    halton = qmc.Halton(d=problem.dim, scramble=True, seed=stream(seed, "oracle"))
    return problem.lower + halton.random(oracle_size(problem, n_points)) * (problem.upper - problem.lower)


def build_oracle(problem: Problem, n_points: int | None = None, seed: int = 0, regions: RegionSets | None = None) -> OfflineOracle:
    """Evaluate the noiseless problem on the offline grid.

    With ``regions`` the front must reach into both regions, otherwise
    ``EmptyRegionError`` is raised.
    """
    F = problem.evaluate(oracle_inputs(problem, n_points, seed))
    oracle = OfflineOracle(problem.id, F, F[nondominated_mask(F)], seed)
    if regions is not None:
        oracle.check_regions(regions)
    return oracle


# ---------------------------------------------------------------- metrics


def fill_distance(C, D) -> float:
    """``sup_{d in D} min_{c in C} ||c - d||``."""
    return float(cdist(np.atleast_2d(D), np.atleast_2d(C)).min(axis=1).max())


def worst_case_point(D) -> np.ndarray:
    """The reference point whose single-point fill distance is largest."""
    D = np.atleast_2d(D)
    return D[int(np.argmax(cdist(D, D).max(axis=1)))]


def region_fill_distance(C, D_region) -> float:
    D_region = np.atleast_2d(D_region)
    if D_region.size == 0:
        raise EmptyRegionError("reference set is empty in this region")
    C = np.atleast_2d(C)
    if C.size == 0:
        C = worst_case_point(D_region)[None, :]
    return fill_distance(C, D_region)


def soft_hard_fill_distance(C, oracle: OfflineOracle, regions: RegionSets, upsilon: float = DEFAULT_UPSILON) -> float:
    """Weighted soft/hard fill distances of ``C`` against the offline front.

    A region with no member of ``C`` is represented by the reference set's
    worst-case point instead.
    """
    n_obj = oracle.front.shape[1]
    C = _as_points(C, n_obj)
    soft = region_fill_distance(C[regions.in_soft(C)] if len(C) else C, oracle.region_front(regions, "soft"))
    hard = region_fill_distance(C[regions.in_hard(C)] if len(C) else C, oracle.region_front(regions, "hard"))
    return upsilon * soft + (1.0 - upsilon) * hard


def positive_samples_ratio(C, regions: RegionSets, upsilon: float = DEFAULT_UPSILON) -> float:
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.size == 0:
        raise ValueError("positive_samples_ratio needs at least one point")
    return float(upsilon * regions.in_soft(C).mean() + (1.0 - upsilon) * regions.in_hard(C).mean())


def soft_hard_hypervolume(C, regions: RegionSets) -> tuple[float, float]:
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.size == 0:
        return 0.0, 0.0
    front = C[nondominated_mask(C)]
    return hypervolume(front, regions.soft), hypervolume(front, regions.hard)


def soft_distance_weighted_score(C, regions: RegionSets, floor: float = DISTANCE_FLOOR) -> float:
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.size == 0:
        return 0.0
    dist = np.linalg.norm(C - regions.soft, axis=1)
    return float(np.sum(1.0 / np.maximum(dist, floor)))


# ---------------------------------------------------------------- utility ratios


@dataclass(frozen=True, eq=False)
class RatioScale:
    """Per-weight shift and span of the scalarized utility over the offline grid."""

    lambdas: tuple
    s_min: np.ndarray
    s_max: np.ndarray
    scalarization: str
    params: ChebyshevParams | None
    spec: ShfVectorSpec

    def ratios(self, F) -> np.ndarray:
        """``(n, m)`` shifted utility ratios of objective vectors; infeasible rows give 0."""
        U = shf_transform(np.atleast_2d(F), self.spec)
        S = scalarize_matrix(U, self.lambdas, self.scalarization, self.params)
        R = (S - self.s_min) / (self.s_max - self.s_min)
        return np.where(np.isfinite(R), np.maximum(R, 0.0), 0.0)


def ratio_scale(oracle: OfflineOracle, lambdas: Sequence, spec: ShfVectorSpec, scalarization: str = "augmented_chebyshev", params: ChebyshevParams | None = None) -> RatioScale:
    """Shift by the worst hard-feasible grid value, scale by the best grid value."""
    if params is None and scalarization == "augmented_chebyshev":
        params = ChebyshevParams.for_spec(spec)
    U = shf_transform(oracle.objectives, spec)
    S = scalarize_matrix(U, lambdas, scalarization, params)
    feasible = np.all(np.isfinite(U), axis=1)
    if not feasible.any():
        raise EmptyRegionError("offline grid has no hard-feasible point")
    S = S[feasible]
    s_min, s_max = S.min(axis=0), S.max(axis=0)
    if np.any(s_max <= s_min):
        raise ValueError("degenerate weight vector on the offline grid")
    return RatioScale(tuple(lambdas), s_min, s_max, scalarization, params, spec)


def shf_utility_ratio(C, lambda_star, oracle: OfflineOracle, spec: ShfVectorSpec, scalarization: str = "augmented_chebyshev", params: ChebyshevParams | None = None) -> float:
    """Best shifted utility in ``C`` over the best on the offline grid, for one weight.

    Zero when ``C`` has no hard-feasible point. May exceed 1 when ``C`` holds a
    point better than every grid point.
    """
    scale = ratio_scale(oracle, [lambda_star], spec, scalarization, params)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.size == 0:
        return 0.0
    return float(scale.ratios(C)[:, 0].max())


def utility_ratio_trace(C, scale: RatioScale, weight: int = 0) -> np.ndarray:
    """Ratio of the growing prefixes ``C[:1], C[:2], ...`` for one weight."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.size == 0:
        return np.empty(0)
    return np.maximum.accumulate(scale.ratios(C)[:, weight])


def bayes_utility_ratio_trace(C, scale: RatioScale) -> np.ndarray:
    """Mean over the scale's weights of the prefix utility ratio; non-decreasing."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.size == 0:
        return np.empty(0)
    return np.maximum.accumulate(scale.ratios(C), axis=0).mean(axis=1)


# ---------------------------------------------------------------- traces

TRACE_COLUMNS = ("iter", "fill", "pos_ratio", "hv_soft", "hv_hard", "dws", "shf_ratio")


def metric_trace(F, regions: RegionSets, oracle: OfflineOracle | None, scale: RatioScale | None, upsilon: float = DEFAULT_UPSILON) -> list[dict]:
    """Per-prefix metrics for the objective vectors ``F`` in sampling order.

    ``fill`` is NaN when the oracle front misses a region; ``shf_ratio`` is the
    Bayes utility ratio averaged over the scale's weights.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    n = F.shape[0]
    bayes = bayes_utility_ratio_trace(F, scale) if scale is not None else np.full(n, np.nan)
    fill_ok = True
    if oracle is not None:
        try:
            oracle.check_regions(regions)
        except EmptyRegionError as exc:
            log.warning("fill distance undefined: %s", exc)
            fill_ok = False
    in_soft = regions.in_soft(F)
    in_hard = regions.in_hard(F)
    inv = 1.0 / np.maximum(np.linalg.norm(F - regions.soft, axis=1), DISTANCE_FLOOR)
    dws = np.cumsum(inv)
    rows = []
    for i in range(1, n + 1):
        P = F[:i]
        fill = soft_hard_fill_distance(P, oracle, regions, upsilon) if (oracle is not None and fill_ok) else float("nan")
        hv_s, hv_h = soft_hard_hypervolume(P, regions)
        rows.append(
            {
                "iter": i,
                "fill": fill,
                "pos_ratio": float(upsilon * in_soft[:i].mean() + (1 - upsilon) * in_hard[:i].mean()),
                "hv_soft": hv_s,
                "hv_hard": hv_h,
                "dws": float(dws[i - 1]),
                "shf_ratio": float(bayes[i - 1]),
            }
        )
    return rows
