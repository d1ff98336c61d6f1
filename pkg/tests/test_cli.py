import dataclasses
import json

import pytest
import yaml

from mosh import cli
from mosh.config import ConfigError, ExperimentConfig
from mosh.pipeline import ArtifactError, cmd_dense, cmd_sparse, read_csv, run_dense


def small(tmp_path, **kw):
    return ExperimentConfig(**{"T": 4, "seeds": [0, 1], "out": str(tmp_path), **kw})


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(problem="dtlz2")
    with pytest.raises(ConfigError):
        ExperimentConfig(configuration="nope")
    with pytest.raises(ConfigError):
        ExperimentConfig(method="nsga2")
    with pytest.raises(ConfigError):
        ExperimentConfig(seeds=[])
    with pytest.raises(ConfigError):
        ExperimentConfig(seeds=[1, 1])
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig(shf=[{"alpha_soft": 0.1, "alpha_hard": 0.5}, {"alpha_soft": 0.8, "alpha_hard": 0.5}])


def test_explicit_bounds_override_configuration():
    cfg = ExperimentConfig(shf=[{"alpha_soft": 0.9, "alpha_hard": 0.5}, {"alpha_soft": 0.8, "alpha_hard": 0.4}])
    assert cfg.spec().alpha_soft.tolist() == [0.9, 0.8]


def test_hash_ignores_output_location(tmp_path):
    a = ExperimentConfig(out="x")
    # fields that only choose artifact paths leave per-seed artifacts unchanged
    b = ExperimentConfig(out="y", workers=4, seeds=[7], method="random", sparsifier="greedy")
    c = ExperimentConfig(T=50)
    assert a.manifest_hash == b.manifest_hash != c.manifest_hash


def test_yaml_round_trip(tmp_path):
    cfg = ExperimentConfig(T=7, seeds=[3])
    cfg.dump(tmp_path / "c.yaml")
    assert ExperimentConfig.load(tmp_path / "c.yaml") == cfg


def test_dense_writes_archives_traces_and_summary(tmp_path):
    cfg = small(tmp_path)
    res = cmd_dense(cfg, tmp_path)
    assert len(res["runs"]) == 2
    manifest, rows = read_csv(res["summary"])
    assert manifest == cfg.manifest_hash and len(rows) == 6 + 4
    data = json.loads((tmp_path / "dense_manifest.json").read_text())
    assert data["manifest"] == cfg.manifest_hash
    assert set(data["wall_times"]) == {"mosh_dense/seed0", "mosh_dense/seed1"}
    assert data["ledger"]["n_init_effective"] == 6


def test_sparse_baselines_match_saturate_size(tmp_path):
    cfg = small(tmp_path, T=20)
    cmd_dense(cfg, tmp_path)
    sizes = {}
    for name in ("saturate", "greedy", "random"):
        res = cmd_sparse(dataclasses.replace(cfg, sparsifier=name), tmp_path)
        sizes[name] = [len(read_csv(r["trace"])[1]) for r in res["runs"]]
    assert sizes["saturate"] == sizes["greedy"] == sizes["random"]


def test_sparse_trace_non_decreasing_and_full_set_reaches_one(tmp_path):
    cfg = small(tmp_path, T=10, k=1000)
    cmd_dense(cfg, tmp_path)
    res = cmd_sparse(cfg, tmp_path)
    for r in res["runs"]:
        rows = read_csv(r["trace"])[1]
        dense_ratio = [float(x["ratio_dense"]) for x in rows]
        oracle_ratio = [float(x["ratio_oracle"]) for x in rows]
        assert dense_ratio == sorted(dense_ratio) and oracle_ratio == sorted(oracle_ratio)
        assert dense_ratio[-1] == 1.0


def test_selection_json_records_psi_and_q_trace(tmp_path):
    cfg = small(tmp_path, T=20)
    cmd_dense(cfg, tmp_path)
    res = cmd_sparse(cfg, tmp_path)
    sel = json.loads(open(res["runs"][0]["selection"]).read())
    assert sel["manifest"] == cfg.manifest_hash and sel["psi_log"] == "natural"
    assert sel["q_trace"] and len(sel["lambda_star"]) == 2


def test_missing_archive(tmp_path):
    with pytest.raises(ArtifactError):
        cmd_sparse(small(tmp_path), tmp_path)


def test_foreign_archive_refused(tmp_path):
    cfg = small(tmp_path)
    run_dense(cfg, "mosh_dense", 0, tmp_path)
    with pytest.raises(ArtifactError):
        run_dense(dataclasses.replace(cfg, T=5), "mosh_dense", 0, tmp_path)


def test_cli_exit_codes(tmp_path, capsys):
    cfg_path = tmp_path / "c.yaml"
    cfg_path.write_text(yaml.safe_dump({"T": 3, "seeds": [0]}))
    assert cli.main(["dense", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "dense" / "mosh_dense" / "seed0.jsonl").exists()
    assert cli.main(["dense", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert cli.main(["sparse", "--out", str(tmp_path / "empty")]) == 1
    assert cli.main(["dense", "--config", str(cfg_path), "--seed-override", "4", "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "dense" / "mosh_dense" / "seed4.jsonl").exists()
    err = capsys.readouterr().err
    assert "config error" in err and "missing archive" in err


def test_oracle_build_command(tmp_path):
    assert cli.main(["oracle-build", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "oracle" / "branin_currin.json").exists()
