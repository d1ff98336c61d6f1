"""Step 2: sparsify a dense set with SATURATE over per-weight coverage functions.

Each weight vector ``lam`` defines a coverage function over subsets ``C`` of
the dense set: the best scalarized utility in ``C`` relative to the best in
the whole set. Scalarized values are shifted by their minimum over the dense
set first (augmented Chebyshev values are negative), so

    F_lam(C) = (max_C s_lam - min_D s_lam) / (max_D s_lam - min_D s_lam)

with ``F_lam(empty) = 0`` and ``F_lam(D) = 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mosh.scalarize import ChebyshevParams, scalarize_matrix
from mosh.shf import hard_feasible

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CoverageObjective:
    """Normalized per-weight scores ``G[x, i]`` of the hard-feasible dense points.

    ``indices`` maps local rows back to positions in the original dense set;
    all index arguments below are local.
    """

    G: np.ndarray  # (n, m), each column spans [0, 1] with max exactly 1
    indices: np.ndarray
    lambdas: tuple
    s_min: np.ndarray
    s_max: np.ndarray
    dropped: tuple = ()

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def m(self) -> int:
        return self.G.shape[1]

    def coverage(self, C: Sequence[int]) -> np.ndarray:
        """``F_i(C)`` for every weight ``i``."""
        C = list(C)
        if not C:
            return np.zeros(self.m)
        return self.G[C].max(axis=0)

    def min_coverage(self, C: Sequence[int]) -> float:
        return float(self.coverage(C).min())


def build_objective(U, lambdas: Sequence, scalarization: str = "augmented_chebyshev", params: ChebyshevParams | None = None) -> CoverageObjective:
    """Drop hard-infeasible rows and degenerate weights, then normalize."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    keep = np.flatnonzero(hard_feasible(U))
    if keep.size == 0:
        raise ValueError("no hard-feasible point in the dense set")
    S = scalarize_matrix(U[keep], lambdas, scalarization, params)
    s_min = S.min(axis=0)
    s_max = S.max(axis=0)
    good = s_max > s_min
    dropped = tuple(i for i in range(len(lambdas)) if not good[i])
    if dropped:
        log.warning("dropping %d weight vectors with a constant score over the dense set", len(dropped))
    if not good.any():
        raise ValueError("every weight vector is degenerate on this dense set")
    S, s_min, s_max = S[:, good], s_min[good], s_max[good]
    G = (S - s_min) / (s_max - s_min)
    return CoverageObjective(
        G=G,
        indices=keep,
        lambdas=tuple(l for l, g in zip(lambdas, good) if g),
        s_min=s_min,
        s_max=s_max,
        dropped=dropped,
    )


def f_lambda(C: Sequence[int], i: int, obj: CoverageObjective) -> float:
    C = list(C)
    if not C:
        return 0.0
    return float(obj.G[C, i].max())


def truncated_mean(cover: np.ndarray, q: float) -> float:
    """``(1/m) sum_i min(F_i(C), q)``."""
    return float(np.minimum(cover, q).mean())


@dataclass(eq=False)
class SparseSelection:
    chosen: list[int]  # local indices, in selection order
    k: int
    psi: float
    objective: CoverageObjective
    q_trace: list = field(default_factory=list)
    method: str = "saturate"

    @property
    def size(self) -> int:
        return len(self.chosen)

    @property
    def coverage(self) -> np.ndarray:
        return self.objective.coverage(self.chosen)

    @property
    def min_coverage(self) -> float:
        return self.objective.min_coverage(self.chosen)

    @property
    def dense_indices(self) -> list[int]:
        return [int(self.objective.indices[c]) for c in self.chosen]


@dataclass
class GpcResult:
    chosen: list[int]
    gains: list[float]


def gpc(q: float, obj: CoverageObjective, max_size: int | None = None) -> GpcResult:
    """Greedy partial cover of the truncated mean up to level ``q``.

    Adds the element with the largest marginal gain (lowest index on ties)
    until every ``F_i(C) >= q``, which is exactly ``mean_i min(F_i, q) >= q``.
    With ``max_size`` the loop gives up early once the cover is that large.
    """
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    cover = np.zeros(obj.m)
    chosen: list[int] = []
    gains: list[float] = []
    free = np.ones(obj.n, dtype=bool)
    Gq = np.minimum(obj.G, q)
    while np.any(cover < q):
        if max_size is not None and len(chosen) >= max_size:
            break
        current = np.minimum(cover, q).mean()
        cand = np.maximum(Gq, np.minimum(cover, q)).mean(axis=1) - current
        cand[~free] = -np.inf
        c = int(np.argmax(cand))
        if not cand[c] > 0:
            raise RuntimeError(f"partial cover stalled below q={q}")
        chosen.append(c)
        gains.append(float(cand[c]))
        free[c] = False
        cover = np.maximum(cover, obj.G[c])
    return GpcResult(chosen, gains)


def prune_cover(chosen: Sequence[int], q: float, obj: CoverageObjective) -> list[int]:
    """Reverse-delete: drop elements, latest first, whose removal keeps every ``F_i >= q``."""
    kept = list(chosen)
    for c in reversed(list(chosen)):
        rest = [x for x in kept if x != c]
        if rest and not np.any(obj.coverage(rest) < q):
            kept = rest
    return kept


def psi_factor(obj: CoverageObjective) -> float:
    """``1 + ln(max_x sum_i F_i({x}))``; natural log."""
    return 1.0 + math.log(float(obj.G.sum(axis=1).max()))


def saturate(obj: CoverageObjective, k: int, psi: float | None = None, refine: bool = True, prune: bool = True) -> SparseSelection:
    """Bisection on the coverage level with greedy partial covers.

    The main loop halves ``[q_min, q_max]`` until it is narrower than ``1/m``.
    With ``refine`` the bracket is then closed exactly by bisecting over the
    distinct score values inside it, since the optimal max-min coverage is
    always one of the entries of ``G``. With ``prune`` each greedy cover is
    reverse-deleted before its size is tested against ``floor(psi * k)``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if psi is None:
        psi = psi_factor(obj)
    if k >= obj.n:
        chosen = list(range(obj.n))
        return SparseSelection(chosen, k, psi, obj, [], "saturate")
    budget = math.floor(psi * k)
    q_min, q_max = 0.0, float(obj.G.max(axis=0).min())
    best: list[int] = []
    trace = []
    phase = "bisect"

    def attempt(q: float) -> bool:
        nonlocal q_min, q_max, best
        chosen = gpc(q, obj, max_size=None if prune else budget + 1).chosen
        if prune:
            chosen = prune_cover(chosen, q, obj)
        feasible = len(chosen) <= budget and not np.any(obj.coverage(chosen) < q)
        trace.append({
            "phase": phase, "q": q, "q_min": q_min, "q_max": q_max,
            "size": len(chosen), "feasible": feasible,
        })
        if feasible:
            q_min, best = q, chosen
        else:
            q_max = q
        return feasible

    while q_max - q_min >= 1.0 / obj.m:
        attempt((q_min + q_max) / 2.0)

    if refine:
        phase = "refine"
        values = np.unique(obj.G)
        values = values[(values > q_min) & (values <= q_max)]
        lo, hi = 0, len(values) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            if attempt(float(values[mid])):
                lo = mid + 1
            else:
                hi = mid - 1
    return SparseSelection(list(best), k, psi, obj, trace, "saturate")


def greedy_sparsify(obj: CoverageObjective, k: int) -> SparseSelection:
    """Plain greedy on ``min_i F_i``, lowest index on ties."""
    cover = np.zeros(obj.m)
    chosen: list[int] = []
    free = np.ones(obj.n, dtype=bool)
    for _ in range(min(k, obj.n)):
        score = np.maximum(obj.G, cover).min(axis=1)
        score[~free] = -np.inf
        c = int(np.argmax(score))
        chosen.append(c)
        free[c] = False
        cover = np.maximum(cover, obj.G[c])
    return SparseSelection(chosen, k, psi_factor(obj), obj, [], "greedy")


def random_sparsify(obj: CoverageObjective, k: int, rng: np.random.Generator) -> SparseSelection:
    if k > obj.n:
        raise ValueError(f"cannot draw {k} distinct points from {obj.n}")
    chosen = [int(i) for i in rng.choice(obj.n, size=k, replace=False)]
    return SparseSelection(chosen, k, psi_factor(obj), obj, [], "random")
