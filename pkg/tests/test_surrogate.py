import numpy as np
import pytest

from mosh.surrogate import (
    GpNumericalError,
    fit_hyperparameters,
    gp_condition,
    gp_init,
    gp_posterior,
    gp_update,
    log_marginal_likelihood,
    should_refit,
)


def naive_posterior(state, Xq):
    """Direct dense solves in raw units, no Cholesky reuse."""
    Z = (state.X - state.lower) / (state.upper - state.lower)
    Zq = (Xq - state.lower) / (state.upper - state.lower)
    k = lambda A, B: state.signal_variance * np.exp(
        -0.5 * ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1) / state.lengthscale**2
    )
    K = k(Z, Z) + (state.noise_variance + state.jitter) * np.eye(len(Z))
    yn = (state.y - state.y_mean) / state.y_std
    Ks = k(Zq, Z)
    mean = Ks @ np.linalg.solve(K, yn)
    var = state.signal_variance - np.einsum("ij,ji->i", Ks, np.linalg.solve(K, Ks.T))
    return state.y_mean + state.y_std * mean, state.y_std * np.sqrt(np.maximum(var, 0))


def test_prior_moments():
    s = gp_init([0, 0], [1, 1])
    post = gp_posterior(s, np.random.default_rng(0).random((4, 2)))
    assert np.all(post.mean == 0.0)
    assert np.allclose(post.stddev, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 10, 40])
def test_posterior_matches_direct_solve(n, rng):
    lower, upper = np.array([-5.0, 0.0]), np.array([10.0, 15.0])
    X = lower + rng.random((n, 2)) * (upper - lower)
    y = np.sin(X[:, 0]) + 0.1 * X[:, 1]
    s = gp_condition(gp_init(lower, upper), X, y)
    Xq = lower + rng.random((25, 2)) * (upper - lower)
    post = gp_posterior(s, Xq)
    m, sd = naive_posterior(s, Xq)
    assert np.allclose(post.mean, m, atol=1e-6)
    assert np.allclose(post.stddev, sd, atol=1e-6)


def test_low_noise_interpolates(rng):
    X = rng.random((8, 1))
    y = np.cos(4 * X[:, 0])
    s = gp_condition(gp_init([0], [1]), X, y)
    post = gp_posterior(s, X)
    assert np.allclose(post.mean, y, atol=0.02)
    assert np.all(post.stddev < 0.1)


def test_refit_schedule():
    assert [n for n in range(1, 21) if should_refit(n)] == [3, 5, 10, 15, 20]


def test_update_equals_condition_when_schedule_matches(rng):
    X = rng.random((6, 2))
    y = X.sum(1)
    s = gp_condition(gp_init([0, 0], [1, 1]), X[:5], y[:5])
    a = gp_update(s, X[5], y[5])
    # n=6 is not a refit step, so the hyperparameters carry over
    b = gp_condition(s, X, y, refit=False)
    assert a.lengthscale == b.lengthscale and a.signal_variance == b.signal_variance
    assert np.allclose(gp_posterior(a, X).mean, gp_posterior(b, X).mean)


def test_fit_picks_grid_maximum(rng):
    X = rng.random((12, 2))
    y = np.sin(6 * X[:, 0])
    s = gp_condition(gp_init([0, 0], [1, 1]), X, y)
    assert s.fit_evaluations == 48
    table = s.lml_table
    i, j = np.unravel_index(np.argmax(table), table.shape)
    assert log_marginal_likelihood(s, s.lengthscale, s.signal_variance) == pytest.approx(table[i, j])
    assert np.isclose(table.max(), table[i, j])


def test_fit_requires_three_points():
    s = gp_condition(gp_init([0], [1]), [[0.1], [0.2]], [0.0, 1.0], refit=False)
    with pytest.raises(ValueError):
        fit_hyperparameters(s)


def test_constant_targets_are_safe():
    s = gp_condition(gp_init([0], [1]), [[0.1], [0.5], [0.9]], [2.0, 2.0, 2.0])
    post = gp_posterior(s, [[0.3]])
    assert post.mean[0] == pytest.approx(2.0)
    assert np.isfinite(post.stddev).all()


def test_duplicate_inputs_factorize():
    X = np.array([[0.5, 0.5]] * 4 + [[0.1, 0.9]])
    s = gp_condition(gp_init([0, 0], [1, 1]), X, [1.0, 1.01, 0.99, 1.0, 0.0])
    assert np.isfinite(gp_posterior(s, X).mean).all()


def test_invalid_box():
    with pytest.raises(ValueError):
        gp_init([0, 1], [1, 1])


def test_numerical_error_type():
    assert issubclass(GpNumericalError, np.linalg.LinAlgError)
