"""Pareto dominance, nondominated filtering and hypervolume (maximization)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MC_SAMPLES = 2**17


def dominates(a, b) -> bool:
    """True iff ``a >= b`` everywhere and ``a > b`` somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return bool(np.all(a >= b) and np.any(a > b))


@dataclass(frozen=True, eq=False)
class FrontierSet:
    points: np.ndarray  # (n, L) objective vectors
    nondominated: np.ndarray  # (n,) bool
    inputs: np.ndarray | None = None

    @property
    def front(self) -> np.ndarray:
        return self.points[self.nondominated]


def nondominated_mask(Y) -> np.ndarray:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = Y.shape[0]
    mask = np.ones(n, dtype=bool)
    if n == 0:
        return mask
    # sorting by descending sum lets a point only be dominated by earlier rows
    order = np.argsort(-Y.sum(axis=1), kind="stable")
    kept: list[int] = []
    for i in order:
        y = Y[i]
        if kept:
            K = Y[kept]
            if np.any(np.all(K >= y, axis=1) & np.any(K > y, axis=1)):
                mask[i] = False
                continue
        kept.append(i)
    return mask


def nondominated_filter(points, inputs=None) -> FrontierSet:
    Y = np.atleast_2d(np.asarray(points, dtype=float))
    if Y.size == 0:
        Y = Y.reshape(0, Y.shape[-1] if Y.ndim == 2 else 0)
    return FrontierSet(Y, nondominated_mask(Y), None if inputs is None else np.asarray(inputs))


def _hv2d(Y: np.ndarray, ref: np.ndarray) -> float:
    Y = Y[np.all(Y > ref, axis=1)]
    if Y.shape[0] == 0:
        return 0.0
    # descending first coordinate, ties by descending second
    order = np.lexsort((-Y[:, 1], -Y[:, 0]))
    volume = 0.0
    best_y = ref[1]
    for x0, x1 in Y[order]:
        if x1 > best_y:
            volume += (x0 - ref[0]) * (x1 - best_y)
            best_y = x1
    return float(volume)


def hypervolume_mc(points, reference, n_samples: int = MC_SAMPLES, seed: int = 0) -> float:
    """Monte-Carlo estimate in the box ``[reference, max(points)]``."""
    Y = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(reference, dtype=float)
    Y = Y[np.all(Y > ref, axis=1)]
    if Y.shape[0] == 0:
        return 0.0
    upper = Y.max(axis=0)
    box = float(np.prod(upper - ref))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 1 << 14
    for start in range(0, n_samples, chunk):
        size = min(chunk, n_samples - start)
        S = ref + rng.random((size, ref.size)) * (upper - ref)
        dominated = np.zeros(size, dtype=bool)
        for y in Y:
            dominated |= np.all(S <= y, axis=1)
        hits += int(dominated.sum())
    return box * hits / n_samples


def hypervolume(points, reference, n_samples: int = MC_SAMPLES, seed: int = 0) -> float:
    """Volume dominated by ``points`` above ``reference``.

    Exact sweep for two objectives, Monte-Carlo otherwise. Accepts a
    ``FrontierSet`` (only its nondominated members count) or a raw array.
    """
    if isinstance(points, FrontierSet):
        Y = points.front
    else:
        Y = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(reference, dtype=float)
    if Y.size == 0:
        return 0.0
    if Y.shape[1] != ref.size:
        raise ValueError("reference dimension mismatch")
    if ref.size == 2:
        return _hv2d(Y, ref)
    return hypervolume_mc(Y, ref, n_samples, seed)
