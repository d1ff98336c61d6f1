"""Scalarizations of utility vectors and the preference-weight prior."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mosh.shf import NEG_INF, ShfVectorSpec

LAMBDA_FLOOR = 1e-6
DEFAULT_GAMMA = 0.05
UTOPIA_OFFSET = 0.01


@dataclass(frozen=True)
class WeightVector:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must lie on the simplex, got {w}")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    def __len__(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.array(self.weights)


@dataclass(frozen=True)
class ChebyshevParams:
    utopia: tuple[float, ...]
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        object.__setattr__(self, "utopia", tuple(float(v) for v in self.utopia))
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    @classmethod
    def for_spec(cls, spec: ShfVectorSpec, gamma: float = DEFAULT_GAMMA) -> "ChebyshevParams":
        """Utopia just above the largest attainable utility in each dimension."""
        return cls(tuple(spec.saturation_values + UTOPIA_OFFSET), gamma)


def _weights(lam) -> np.ndarray:
    return lam.as_array() if isinstance(lam, WeightVector) else np.asarray(lam, dtype=float)


def chebyshev_scalarize(u, lam, params: ChebyshevParams):
    """Augmented Chebyshev value of one utility vector or the rows of a matrix.

    ``-max_l lam_l |u_l - z_l| - gamma * sum_l |u_l - z_l|``; any ``-inf``
    coordinate yields ``-inf``.
    """
    U = np.asarray(u, dtype=float)
    w = _weights(lam)
    z = np.asarray(params.utopia)
    if U.shape[-1] != w.size or z.size != w.size:
        raise ValueError(f"dimension mismatch: u {U.shape}, lambda {w.size}, utopia {z.size}")
    feasible = np.all(np.isfinite(U), axis=-1)
    dev = np.abs(np.where(np.isfinite(U), U, 0.0) - z)
    val = -np.max(w * dev, axis=-1) - params.gamma * np.sum(dev, axis=-1)
    val = np.where(feasible, val, NEG_INF)
    return float(val) if np.ndim(val) == 0 else val


def linear_scalarize(u, lam):
    U = np.asarray(u, dtype=float)
    w = _weights(lam)
    if U.shape[-1] != w.size:
        raise ValueError(f"dimension mismatch: u {U.shape}, lambda {w.size}")
    feasible = np.all(np.isfinite(U), axis=-1)
    val = np.sum(w * np.where(np.isfinite(U), U, 0.0), axis=-1)
    val = np.where(feasible, val, NEG_INF)
    return float(val) if np.ndim(val) == 0 else val


def scalarize_matrix(U, lambdas: Sequence, kind: str, params: ChebyshevParams | None = None) -> np.ndarray:
    """``(n, m)`` matrix of scalarized values for ``n`` utility rows and ``m`` weights."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    W = np.atleast_2d(np.array([_weights(l) for l in lambdas]))
    if U.shape[1] != W.shape[1]:
        raise ValueError(f"dimension mismatch: u {U.shape}, lambdas {W.shape}")
    feasible = np.all(np.isfinite(U), axis=1)
    Uf = np.where(np.isfinite(U), U, 0.0)
    if kind == "linear":
        S = Uf @ W.T
    elif kind == "augmented_chebyshev":
        if params is None:
            raise ValueError("augmented_chebyshev needs ChebyshevParams")
        dev = np.abs(Uf - np.asarray(params.utopia))  # (n, L)
        S = -np.max(dev[:, None, :] * W[None, :, :], axis=2) - params.gamma * dev.sum(axis=1)[:, None]
    else:
        raise ValueError(f"unknown scalarization {kind!r}")
    S[~feasible] = NEG_INF
    return S


def make_scalarizer(kind: str, spec: ShfVectorSpec, gamma: float = DEFAULT_GAMMA):
    """Return ``f(U, lam)`` for the named scalarization."""
    if kind == "linear":
        return linear_scalarize
    if kind == "augmented_chebyshev":
        params = ChebyshevParams.for_spec(spec, gamma)
        return lambda U, lam: chebyshev_scalarize(U, lam, params)
    raise ValueError(f"unknown scalarization {kind!r}")


def sample_lambda(spec: ShfVectorSpec, rng: np.random.Generator, floor: float = LAMBDA_FLOOR) -> WeightVector:
    """Draw ``u_l ~ N(soft_l, |hard_l - soft_l| / 3)`` and project onto the simplex."""
    soft = spec.alpha_soft
    width = np.abs(spec.alpha_hard - soft) / 3.0
    u = np.maximum(rng.normal(soft, width), floor)
    w = u / u.sum()
    # absorb rounding so the simplex check is exact to 1e-12
    w[-1] = max(0.0, 1.0 - w[:-1].sum())
    return WeightVector(tuple(w))


def sample_lambdas(spec: ShfVectorSpec, rng: np.random.Generator, m: int, floor: float = LAMBDA_FLOOR) -> list[WeightVector]:
    return [sample_lambda(spec, rng, floor) for _ in range(m)]
