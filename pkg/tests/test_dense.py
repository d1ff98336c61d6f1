import math

import numpy as np
import pytest

from mosh.bench import BRANIN_CURRIN, get_problem
from mosh.dense import (
    DenseConfig,
    DenseRunError,
    NoisyOracle,
    Record,
    SampleArchive,
    acquisition,
    acquisition_values,
    beta_schedule,
    discrete_greedy_baseline,
    discretize_box,
    discretize_simplex,
    grid_size,
    maximize_acquisition,
    mobo_rs_linear,
    mosh_dense,
    random_sampling_baseline,
    replay_gps,
)
from mosh.scalarize import WeightVector
from mosh.seeding import stream
from mosh.shf import NEG_INF

PROBLEM = get_problem("branin_currin", 0.01)
SPEC = PROBLEM.spec("complete_mid")


def config(**kw):
    return DenseConfig.for_problem(PROBLEM, SPEC, **{"T": 6, **kw})


def test_beta_schedule():
    assert beta_schedule(1) == pytest.approx(math.sqrt(0.125 * math.log(3)))
    assert beta_schedule(50) > beta_schedule(5)
    with pytest.raises(ValueError):
        beta_schedule(0)


def test_default_initial_design_size():
    assert config().initial_samples == 6
    assert config(n_init=3).initial_samples == 3


def test_record_json_round_trip():
    r = Record(3, np.array([0.1, 0.2]), np.array([0.5, 0.6]), np.array([NEG_INF, 1.0]), (0.4, 0.6))
    d = __import__("json").loads(r.to_json())
    assert d["u"][0] is None
    back = Record.from_dict(d)
    assert back.u[0] == NEG_INF and back.lam == (0.4, 0.6)


def test_archive_contiguity():
    a = SampleArchive(0)
    a.append(Record(1, np.zeros(2), np.zeros(2), np.zeros(2)))
    with pytest.raises(ValueError):
        a.append(Record(3, np.zeros(2), np.zeros(2), np.zeros(2)))


def test_mosh_dense_run_shape_and_box():
    cfg = config()
    arch = mosh_dense(cfg, NoisyOracle(PROBLEM, 0))
    assert len(arch) == cfg.initial_samples + cfg.T
    assert [r.t for r in arch.records] == list(range(1, len(arch) + 1))
    assert np.all(PROBLEM.in_box(arch.X))
    assert all(r.lam is None for r in arch.records[:6])
    assert all(r.lam is not None for r in arch.records[6:])


def test_runs_are_deterministic():
    cfg = config()
    a = mosh_dense(cfg, NoisyOracle(PROBLEM, 0))
    b = mosh_dense(cfg, NoisyOracle(PROBLEM, 0))
    assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)


def test_resume_matches_uninterrupted(tmp_path):
    cfg = config()
    full = mosh_dense(cfg, NoisyOracle(PROBLEM, 2))
    path = tmp_path / "a.jsonl"
    full.prefix(8).write_jsonl(path)
    resumed = mosh_dense(cfg, NoisyOracle(PROBLEM, 2), archive_path=path)
    assert np.array_equal(resumed.X, full.X)
    on_disk = SampleArchive.read_jsonl(path)
    assert np.array_equal(on_disk.Y, full.Y)


def test_oracle_failure_keeps_partial_archive():
    def flaky(x, t):
        if t == 8:
            raise RuntimeError("simulator crashed")
        return PROBLEM(x)

    with pytest.raises(DenseRunError) as info:
        mosh_dense(config(), flaky)
    assert len(info.value.archive) == 7


def test_non_finite_observation_rejected():
    with pytest.raises(DenseRunError):
        mosh_dense(config(), lambda x, t: np.array([np.nan, 0.0]))


def test_acquisition_prefers_feasible_optimism():
    cfg = config()
    arch = random_sampling_baseline(cfg, NoisyOracle(PROBLEM, 0))
    states = replay_gps(cfg, arch.records)
    lam = WeightVector((0.5, 0.5))
    X = np.random.default_rng(0).random((50, 2))
    vals = acquisition_values(states, lam, X, 3, cfg)
    assert vals[0] == acquisition(states, lam, X[0], 3, cfg)
    x = maximize_acquisition(states, lam, 3, cfg, stream(0, "acquisition", 3), arch.X)
    assert PROBLEM.in_box(x[None])[0]


def test_fallback_when_nothing_is_feasible():
    # hard bounds nobody can meet force the -inf fallback path
    from mosh.shf import ShfVectorSpec

    spec = ShfVectorSpec.from_bounds([5.0, 4.0, 5.0, 4.0])
    cfg = DenseConfig.for_problem(PROBLEM, spec, T=2)
    arch = mosh_dense(cfg, NoisyOracle(PROBLEM, 0))
    assert len(arch) == cfg.initial_samples + 2
    assert np.all(np.isneginf(arch.U))


def test_baselines_share_the_initial_design():
    cfg = config()
    a = mosh_dense(cfg, NoisyOracle(PROBLEM, 1))
    b = random_sampling_baseline(cfg, NoisyOracle(PROBLEM, 1))
    c = mobo_rs_linear(cfg, NoisyOracle(PROBLEM, 1))
    assert np.array_equal(a.X[:6], b.X[:6]) and np.array_equal(a.X[:6], c.X[:6])
    assert not np.array_equal(a.X, b.X)


def test_grid_counts():
    assert grid_size([0, 0], [1, 1], 0.1) == 100
    assert len(discretize_box([0, 0], [1, 1], 0.1)) == 100
    assert len(discretize_box([0, 0], [1, 1], 0.05)) == 400
    assert len(discretize_box([0], [1], 2.0)) == 1
    with pytest.raises(ValueError, match="400"):
        discretize_box([0, 0], [1, 1], 0.05, cap=100)
    with pytest.raises(ValueError):
        discretize_box([0, 0], [1, 1], 0.0)


def test_simplex_grid():
    # same ceil(1 / delta) points per axis as the box grid
    lams = discretize_simplex(2, 0.1)
    assert len(lams) == 10
    W = np.array([l.weights for l in lams])
    assert np.allclose(W.sum(1), 1)
    assert len(discretize_simplex(3, 0.5)) == 3


def test_discrete_greedy_uses_distinct_grid_points():
    cfg = config(T=5)
    arch = discrete_greedy_baseline(cfg, NoisyOracle(PROBLEM, 0), 0.1)
    grid = discretize_box(*cfg.box, 0.1)
    picked = arch.X[cfg.initial_samples:]
    assert len({tuple(x) for x in picked}) == 5
    assert all(np.any(np.all(grid == x, axis=1)) for x in picked)
