"""Per-objective Gaussian-process regression with an isotropic squared-exponential kernel.

Inputs are rescaled to the unit cube and targets are z-scored with the
current data statistics before fitting; posterior moments are mapped back to
the original units. Hyperparameters are chosen on a fixed grid by log marginal
likelihood, never by gradient steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

DEFAULT_NOISE_VARIANCE = 1e-4
DEFAULT_REFIT_EVERY = 5
LENGTHSCALE_FRACTIONS = tuple(np.geomspace(0.05, 2.0, 16))
SIGNAL_VARIANCE_FACTORS = (0.25, 1.0, 4.0)
JITTER_LADDER = (1e-10, 1e-8, 1e-6)
_LOG_2PI = math.log(2.0 * math.pi)


class GpNumericalError(np.linalg.LinAlgError):
    """Covariance stayed non positive-definite after the whole jitter ladder."""


@dataclass(frozen=True)
class PosteriorMoments:
    mean: np.ndarray
    stddev: np.ndarray


@dataclass(frozen=True, eq=False)
class GpState:
    lower: np.ndarray
    upper: np.ndarray
    X: np.ndarray  # (n, d) raw inputs
    y: np.ndarray  # (n,) raw targets
    lengthscale: float  # unit-cube units
    signal_variance: float  # z-scored target units
    noise_variance: float = DEFAULT_NOISE_VARIANCE
    refit_every: int = DEFAULT_REFIT_EVERY
    lengthscale_grid: tuple = LENGTHSCALE_FRACTIONS
    signal_variance_grid: tuple = SIGNAL_VARIANCE_FACTORS
    jitter_ladder: tuple = JITTER_LADDER
    y_mean: float = 0.0
    y_std: float = 1.0
    chol: np.ndarray | None = None
    alpha: np.ndarray | None = None
    jitter: float = 0.0
    fit_evaluations: int = 0
    fit_count: int = 0
    lml_table: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def box_diagonal(self) -> float:
        # the unit cube after rescaling
        return math.sqrt(self.dim)

    @property
    def prior_stddev(self) -> float:
        return self.y_std * math.sqrt(self.signal_variance)

    def scaled(self, X) -> np.ndarray:
        return (np.atleast_2d(np.asarray(X, dtype=float)) - self.lower) / (self.upper - self.lower)

    def normalized_targets(self) -> np.ndarray:
        return (self.y - self.y_mean) / self.y_std

    def kernel_matrix(self) -> np.ndarray:
        """``K + noise * I`` in z-scored units (no jitter)."""
        Z = self.scaled(self.X)
        K = _se_kernel(_sqdist(Z, Z), self.lengthscale, self.signal_variance)
        return K + self.noise_variance * np.eye(self.n)


def _sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def _se_kernel(sqd: np.ndarray, lengthscale: float, signal_variance: float) -> np.ndarray:
    return signal_variance * np.exp(-0.5 * sqd / lengthscale**2)


def _cholesky(A: np.ndarray, ladder) -> tuple[np.ndarray, float]:
    try:
        return np.linalg.cholesky(A), 0.0
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(A.shape[0])
    for jitter in ladder:
        try:
            return np.linalg.cholesky(A + jitter * eye), jitter
        except np.linalg.LinAlgError:
            continue
    raise GpNumericalError(f"covariance not positive definite after jitter {ladder[-1]:g}")


def _target_stats(y: np.ndarray) -> tuple[float, float]:
    if y.size == 0:
        return 0.0, 1.0
    mean = float(y.mean())
    std = float(y.std())
    if not std > 1e-12:
        std = 1.0
    return mean, std


def gp_init(
    lower,
    upper,
    noise_variance: float = DEFAULT_NOISE_VARIANCE,
    refit_every: int = DEFAULT_REFIT_EVERY,
    lengthscale_grid=LENGTHSCALE_FRACTIONS,
    jitter_ladder=JITTER_LADDER,
) -> GpState:
    """An empty GP(0, k) prior over the box ``[lower, upper]``."""
    if not noise_variance > 0:
        raise ValueError("noise_variance must be positive")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or np.any(upper <= lower):
        raise ValueError("invalid input box")
    grid = tuple(float(v) for v in lengthscale_grid)
    default_ls = min(grid, key=lambda f: abs(math.log(f / 0.25))) * math.sqrt(lower.size)
    return GpState(
        lower=lower,
        upper=upper,
        X=np.empty((0, lower.size)),
        y=np.empty(0),
        lengthscale=default_ls,
        signal_variance=1.0,
        noise_variance=float(noise_variance),
        refit_every=int(refit_every),
        lengthscale_grid=grid,
        jitter_ladder=tuple(float(j) for j in jitter_ladder),
    )


def _factorize(state: GpState) -> GpState:
    if state.n == 0:
        return replace(state, chol=np.empty((0, 0)), alpha=np.empty(0), jitter=0.0)
    L, jitter = _cholesky(state.kernel_matrix(), state.jitter_ladder)
    alpha = cho_solve((L, True), state.normalized_targets())
    return replace(state, chol=L, alpha=alpha, jitter=jitter)


def should_refit(n: int, refit_every: int = DEFAULT_REFIT_EVERY) -> bool:
    return n >= 3 and (n in (3, 5) or n % refit_every == 0)


def log_marginal_likelihood(state: GpState, lengthscale: float, signal_variance: float) -> float:
    """Log evidence of the z-scored targets; ``-inf`` when factorization fails."""
    Z = state.scaled(state.X)
    K = _se_kernel(_sqdist(Z, Z), lengthscale, signal_variance) + state.noise_variance * np.eye(state.n)
    try:
        L, _ = _cholesky(K, state.jitter_ladder)
    except GpNumericalError:
        return -math.inf
    yn = state.normalized_targets()
    a = cho_solve((L, True), yn)
    return float(-0.5 * yn @ a - np.log(np.diag(L)).sum() - 0.5 * state.n * _LOG_2PI)


def fit_hyperparameters(state: GpState) -> GpState:
    """Grid search over lengthscale x signal variance maximizing the log evidence.

    Scans lengthscales in ascending order and only replaces the incumbent on a
    strict improvement, so ties resolve toward the smaller lengthscale.
    """
    if state.n < 3:
        raise ValueError("hyperparameter fitting needs at least 3 observations")
    y_mean, y_std = _target_stats(state.y)
    state = replace(state, y_mean=y_mean, y_std=y_std)
    Z = state.scaled(state.X)
    sqd = _sqdist(Z, Z)
    yn = state.normalized_targets()
    eye = np.eye(state.n)
    target_var = float(yn.var()) if state.n > 1 else 1.0
    if not target_var > 1e-12:
        target_var = 1.0
    lengthscales = [f * state.box_diagonal for f in sorted(state.lengthscale_grid)]
    variances = [f * target_var for f in state.signal_variance_grid]
    table = np.full((len(lengthscales), len(variances)), -np.inf)
    best = (-math.inf, state.lengthscale, state.signal_variance)
    for i, ls in enumerate(lengthscales):
        R = np.exp(-0.5 * sqd / ls**2)
        for j, sv in enumerate(variances):
            try:
                L, _ = _cholesky(sv * R + state.noise_variance * eye, state.jitter_ladder)
            except GpNumericalError:
                continue
            a = cho_solve((L, True), yn)
            lml = float(-0.5 * yn @ a - np.log(np.diag(L)).sum() - 0.5 * state.n * _LOG_2PI)
            table[i, j] = lml
            if lml > best[0]:
                best = (lml, ls, sv)
    state = replace(
        state,
        lengthscale=best[1],
        signal_variance=best[2],
        fit_evaluations=table.size,
        fit_count=state.fit_count + 1,
        lml_table=table,
    )
    return _factorize(state)


def gp_condition(state: GpState, X, y, refit: bool = True) -> GpState:
    """Replace the data set wholesale, optionally refitting, and refactorize."""
    X = np.atleast_2d(np.asarray(X, dtype=float)).reshape(-1, state.dim)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.size:
        raise ValueError("X and y lengths differ")
    y_mean, y_std = _target_stats(y)
    state = replace(state, X=X.copy(), y=y.copy(), y_mean=y_mean, y_std=y_std)
    if refit and state.n >= 3:
        return fit_hyperparameters(state)
    return _factorize(state)


def gp_update(state: GpState, x, y: float) -> GpState:
    """Append one observation; refit on the schedule, always refactorize."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    if x.shape[1] != state.dim:
        raise ValueError(f"expected a {state.dim}-dimensional input")
    X = np.vstack([state.X, x])
    Y = np.append(state.y, float(y))
    return gp_condition(state, X, Y, refit=should_refit(X.shape[0], state.refit_every))


def gp_posterior(state: GpState, X) -> PosteriorMoments:
    """Posterior mean and standard deviation at the rows of ``X``."""
    Zq = state.scaled(X)
    if state.n == 0:
        m = np.full(Zq.shape[0], state.y_mean)
        s = np.full(Zq.shape[0], state.prior_stddev)
        return PosteriorMoments(m, s)
    if state.chol is None:
        state = _factorize(state)
    Ks = _se_kernel(_sqdist(Zq, state.scaled(state.X)), state.lengthscale, state.signal_variance)
    mean = Ks @ state.alpha
    v = solve_triangular(state.chol, Ks.T, lower=True, check_finite=False)
    var = np.maximum(state.signal_variance - (v * v).sum(0), 0.0)
    return PosteriorMoments(state.y_mean + state.y_std * mean, state.y_std * np.sqrt(var))
