"""Piecewise-linear soft-hard utility functions.

Objectives follow the maximization convention. A value below the hard bound
maps to ``-inf`` (IEEE negative infinity is the infeasibility sentinel: it
orders below every finite value and absorbs finite addition).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

NEG_INF = float("-inf")


@dataclass(frozen=True)
class ShfSpec:
    """Soft/hard bounds and slope parameters for one objective."""

    alpha_soft: float
    alpha_hard: float
    zeta: float = 2.0
    beta_slope: float = 0.5

    def __post_init__(self):
        if not self.alpha_hard < self.alpha_soft:
            raise ValueError(
                f"alpha_hard ({self.alpha_hard}) must be < alpha_soft ({self.alpha_soft})"
            )
        if not self.zeta > 1.0:
            raise ValueError(f"zeta must be > 1, got {self.zeta}")
        if not 0.0 <= self.beta_slope <= 1.0:
            raise ValueError(f"beta_slope must lie in [0, 1], got {self.beta_slope}")

    @property
    def alpha_tau(self) -> float:
        return self.alpha_hard + self.zeta * (self.alpha_soft - self.alpha_hard)

    @property
    def saturation_value(self) -> float:
        """Utility attained on ``[alpha_tau, inf)``."""
        return 1.0 + 2.0 * self.beta_slope * (
            normalize(self.alpha_tau, self) - normalize(self.alpha_soft, self)
        )

    def to_dict(self) -> dict:
        return {
            "alpha_soft": self.alpha_soft,
            "alpha_hard": self.alpha_hard,
            "zeta": self.zeta,
            "beta_slope": self.beta_slope,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ShfSpec":
        return cls(
            alpha_soft=float(d["alpha_soft"]),
            alpha_hard=float(d["alpha_hard"]),
            zeta=float(d.get("zeta", 2.0)),
            beta_slope=float(d.get("beta_slope", 0.5)),
        )


@dataclass(frozen=True)
class ShfVectorSpec:
    per_objective: tuple[ShfSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_objective", tuple(self.per_objective))
        if not self.per_objective:
            raise ValueError("at least one objective is required")

    def __len__(self) -> int:
        return len(self.per_objective)

    def __iter__(self):
        return iter(self.per_objective)

    def __getitem__(self, i: int) -> ShfSpec:
        return self.per_objective[i]

    @property
    def alpha_soft(self) -> np.ndarray:
        return np.array([s.alpha_soft for s in self.per_objective])

    @property
    def alpha_hard(self) -> np.ndarray:
        return np.array([s.alpha_hard for s in self.per_objective])

    @property
    def saturation_values(self) -> np.ndarray:
        return np.array([s.saturation_value for s in self.per_objective])

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.per_objective]

    @classmethod
    def from_list(cls, items: Iterable[Mapping]) -> "ShfVectorSpec":
        return cls(tuple(ShfSpec.from_dict(d) for d in items))

    @classmethod
    def from_bounds(
        cls,
        bounds: Sequence[float],
        zeta: float = 2.0,
        beta_slope: float = 0.5,
    ) -> "ShfVectorSpec":
        """Build from a flat ``(soft_0, hard_0, soft_1, hard_1, ...)`` list."""
        if len(bounds) % 2:
            raise ValueError("bounds must come in (soft, hard) pairs")
        return cls(
            tuple(
                ShfSpec(bounds[i], bounds[i + 1], zeta=zeta, beta_slope=beta_slope)
                for i in range(0, len(bounds), 2)
            )
        )


def normalize(z, spec: ShfSpec):
    """Map ``alpha_hard -> 0`` and ``alpha_soft -> 0.5`` linearly."""
    return ((z - spec.alpha_hard) / (spec.alpha_soft - spec.alpha_hard)) * 0.5


def shf_eval(phi: float, spec: ShfSpec) -> float:
    phi = float(phi)
    if phi < spec.alpha_hard:
        return NEG_INF
    if phi == spec.alpha_hard:
        return 0.0
    if phi < spec.alpha_soft:
        return 2.0 * normalize(phi, spec)
    if phi == spec.alpha_soft:
        return 1.0
    if phi < spec.alpha_tau:
        return 1.0 + 2.0 * spec.beta_slope * (normalize(phi, spec) - normalize(spec.alpha_soft, spec))
    return spec.saturation_value


def shf_eval_vector(y: Sequence[float], spec: ShfVectorSpec) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (len(spec),):
        raise ValueError(f"expected {len(spec)} objectives, got shape {y.shape}")
    return np.array([shf_eval(v, s) for v, s in zip(y, spec)])


def shf_transform(Y, spec: ShfVectorSpec) -> np.ndarray:
    """Vectorized ``shf_eval_vector`` over the rows of an ``(n, L)`` array.

    Agrees with the scalar path elementwise, including the equality branches.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.shape[-1] != len(spec):
        raise ValueError(f"expected {len(spec)} objectives, got shape {Y.shape}")
    out = np.empty_like(Y)
    for j, s in enumerate(spec):
        phi = Y[..., j]
        z = normalize(phi, s)
        below_soft = 2.0 * z
        above_soft = 1.0 + 2.0 * s.beta_slope * (z - normalize(s.alpha_soft, s))
        col = np.where(phi < s.alpha_soft, below_soft, above_soft)
        col = np.where(phi >= s.alpha_tau, s.saturation_value, col)
        col = np.where(phi == s.alpha_soft, 1.0, col)
        col = np.where(phi == s.alpha_hard, 0.0, col)
        col = np.where(phi < s.alpha_hard, NEG_INF, col)
        out[..., j] = col
    return out


def hard_feasible(U) -> np.ndarray:
    """Row mask of utility vectors with no ``-inf`` coordinate."""
    return np.all(np.isfinite(np.atleast_2d(U)), axis=-1)
