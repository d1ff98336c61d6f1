"""Per-seed experiment pipelines and their on-disk artifacts.

Layout under the output directory::

    oracle/<problem>.json                      frozen offline grid
    dense/<method>/seed<k>.jsonl               Step-1 archive
    dense/<method>/seed<k>_trace.csv           per-iteration metrics
    dense/<method>/summary.csv                 mean and std across seeds
    sparse/<method>/<sparsifier>/seed<k>.json  selection and bisection trace
    sparse/<method>/<sparsifier>/seed<k>_trace.csv
    e2e/summary.csv                            one row per Step-1 method
    <command>_manifest.json

Every CSV starts with ``# manifest: <hash>``; JSON artifacts carry a
``manifest`` key. Wall-clock times only appear in the manifest files so the
remaining artifacts are byte-identical across reruns.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from mosh import __version__, dense, metrics, scalarize, surrogate
from mosh.config import ExperimentConfig
from mosh.dense import METHODS, NoisyOracle, SampleArchive, discrete_greedy_baseline, replay_gps
from mosh.metrics import (
    TRACE_COLUMNS,
    OfflineOracle,
    RegionSets,
    build_oracle,
    metric_trace,
    ratio_scale,
    utility_ratio_trace,
)
from mosh.scalarize import sample_lambda, sample_lambdas, scalarize_matrix
from mosh.seeding import STREAMS, stream
from mosh.shf import hard_feasible, shf_transform
from mosh.sparse import build_objective, greedy_sparsify, random_sparsify, saturate
from mosh.surrogate import gp_posterior

log = logging.getLogger(__name__)

SPARSE_TRACE_COLUMNS = ("point", "dense_index", "ratio_oracle", "ratio_dense")


class ArtifactError(RuntimeError):
    """A required input artifact is missing or belongs to another manifest."""


# ---------------------------------------------------------------- file helpers


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, rows: list[dict], columns, manifest: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(f"# manifest: {manifest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    path.write_text(buf.getvalue())


def read_csv(path) -> tuple[str, list[dict]]:
    lines = Path(path).read_text().splitlines()
    manifest = lines[0].split(":", 1)[1].strip()
    rows = list(csv.DictReader(lines[1:]))
    return manifest, rows


def write_json(path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def archive_path(out, method: str, seed: int) -> Path:
    return Path(out) / "dense" / method / f"seed{seed}.jsonl"


def dense_trace_path(out, method: str, seed: int) -> Path:
    return Path(out) / "dense" / method / f"seed{seed}_trace.csv"


def sparse_paths(out, method: str, sparsifier: str, seed: int) -> tuple[Path, Path]:
    base = Path(out) / "sparse" / method / sparsifier
    return base / f"seed{seed}.json", base / f"seed{seed}_trace.csv"


def oracle_path(out, problem: str) -> Path:
    return Path(out) / "oracle" / f"{problem}.json"


# ---------------------------------------------------------------- oracle


def load_or_build_oracle(cfg: ExperimentConfig, out=None) -> OfflineOracle:
    problem = cfg.problem_obj()
    path = oracle_path(out, cfg.problem) if out is not None else None
    if path is not None and path.exists():
        oracle = OfflineOracle.load(path)
        if len(oracle.objectives) == metrics.oracle_size(problem, cfg.oracle_points) and oracle.seed == cfg.oracle_seed:
            return oracle
        log.info("rebuilding %s: grid size or seed changed", path)
    oracle = build_oracle(problem, cfg.oracle_points, cfg.oracle_seed)
    if path is not None:
        oracle.save(path)
    return oracle


# ---------------------------------------------------------------- Step 1


def _header(cfg: ExperimentConfig, method: str) -> dict:
    return {"manifest": cfg.manifest_hash, "method": method, "problem": cfg.problem}


def run_dense(cfg: ExperimentConfig, method: str, seed: int, out=None) -> SampleArchive:
    """Run (or resume) one Step-1 method for one seed."""
    dcfg = cfg.dense_config(seed)
    oracle = NoisyOracle(cfg.problem_obj(), seed)
    header = _header(cfg, method)
    path = None
    if out is not None:
        path = archive_path(out, method, seed)
        if path.exists():
            found = SampleArchive.read_jsonl(path).header.get("manifest")
            if found != cfg.manifest_hash:
                raise ArtifactError(
                    f"{path} belongs to manifest {found}, not {cfg.manifest_hash}; use a fresh --out"
                )
    if method == "discrete_greedy":
        return discrete_greedy_baseline(dcfg, oracle, cfg.delta, path, header, cfg.grid_cap)
    return METHODS[method](dcfg, oracle, path, header)


def load_archive(cfg: ExperimentConfig, method: str, seed: int, out) -> SampleArchive:
    path = archive_path(out, method, seed)
    if not path.exists():
        raise ArtifactError(f"missing archive {path}; run the dense command first")
    return SampleArchive.read_jsonl(path)


def eval_scale(cfg: ExperimentConfig, oracle: OfflineOracle, seed: int):
    spec = cfg.spec()
    lambdas = sample_lambdas(spec, stream(seed, "eval_lambdas"), cfg.eval_lambdas, cfg.lambda_floor)
    params = scalarize.ChebyshevParams.for_spec(spec, cfg.gamma)
    return ratio_scale(oracle, lambdas, spec, cfg.scalarization, params)


def dense_metrics(cfg: ExperimentConfig, archive: SampleArchive, oracle: OfflineOracle, seed: int) -> list[dict]:
    """Metric trace of the noiseless objectives at the archived inputs."""
    F = cfg.problem_obj().evaluate(archive.X)
    regions = RegionSets.from_spec(cfg.spec())
    return metric_trace(F, regions, oracle, eval_scale(cfg, oracle, seed), cfg.upsilon)


def summarize_traces(traces: list[list[dict]], columns=TRACE_COLUMNS[1:]) -> list[dict]:
    """Mean and population std across seeds, per iteration, over the common prefix."""
    n = min(len(t) for t in traces)
    rows = []
    for i in range(n):
        row = {"iter": traces[0][i]["iter"]}
        for c in columns:
            vals = np.array([float(t[i][c]) for t in traces])
            row[f"{c}_mean"] = float(vals.mean())
            row[f"{c}_std"] = float(vals.std())
        rows.append(row)
    return rows


def summary_columns(columns=TRACE_COLUMNS[1:]) -> list[str]:
    return ["iter"] + [f"{c}_{s}" for c in columns for s in ("mean", "std")]


# ---------------------------------------------------------------- Step 2


def sparse_utilities(cfg: ExperimentConfig, archive: SampleArchive, seed: int) -> np.ndarray:
    """SHF utilities of the dense points used to build the coverage functions.

    ``posterior_mean`` replays the Step-1 surrogate over the archive and
    maps its posterior mean at the archived inputs through the SHF, which
    removes most of the observation noise; ``observed`` uses the archived
    noisy utilities.
    """
    if cfg.sparse_utilities == "observed":
        return archive.U
    dcfg = cfg.dense_config(seed)
    states = replay_gps(dcfg, archive.records)
    X = archive.X
    mean = np.column_stack([gp_posterior(s, X).mean for s in states])
    return shf_transform(mean, cfg.spec())


@dataclass
class SparseOutcome:
    seed: int
    method: str
    sparsifier: str
    dense_indices: list
    saturate_size: int
    psi: float
    trace: list = field(default_factory=list)
    q_trace: list = field(default_factory=list)
    lambda_star: tuple = ()

    def ratio_after(self, n_viewed: int) -> float:
        """Ratio after ``n_viewed`` points, or after the last one if fewer were selected."""
        if not self.trace:
            return 0.0
        return float(self.trace[min(n_viewed, len(self.trace)) - 1]["ratio_oracle"])


def run_sparse(cfg: ExperimentConfig, archive: SampleArchive, seed: int, oracle: OfflineOracle, method: str | None = None, sparsifier: str | None = None) -> SparseOutcome:
    """Sparsify one dense archive and score each successive viewed point for a simulated DM."""
    method = method or cfg.method
    sparsifier = sparsifier or cfg.sparsifier
    spec = cfg.spec()
    params = scalarize.ChebyshevParams.for_spec(spec, cfg.gamma)
    lambdas = sample_lambdas(spec, stream(seed, "sparse_lambdas"), cfg.m, cfg.lambda_floor)
    U = sparse_utilities(cfg, archive, seed)
    feasible_rows = np.flatnonzero(hard_feasible(U))
    if len(feasible_rows) <= 1:
        # nothing to trade off: view the lone feasible point, if any
        log.warning("seed %d: %d hard-feasible dense points, skipping sparsification", seed, len(feasible_rows))
        idx, sat_size, psi, q_trace = [int(i) for i in feasible_rows], len(feasible_rows), 1.0, []
    else:
        obj = build_objective(U, lambdas, cfg.scalarization, params)
        sat = saturate(obj, cfg.k)
        if sparsifier == "saturate":
            sel = sat
        elif sparsifier == "greedy":
            sel = greedy_sparsify(obj, sat.size)
        else:
            sel = random_sparsify(obj, sat.size, stream(seed, "random_sparsify"))
        idx, sat_size, psi, q_trace = sel.dense_indices, sat.size, sat.psi, sat.q_trace

    lam_star = sample_lambda(spec, stream(seed, "dm_lambda"), cfg.lambda_floor)
    problem = cfg.problem_obj()
    F_dense = problem.evaluate(archive.X)
    F_view = F_dense[idx]
    scale = ratio_scale(oracle, [lam_star], spec, cfg.scalarization, params)
    ratio_oracle = utility_ratio_trace(F_view, scale)

    # the same weight measured against the dense set itself
    S_dense = scalarize_matrix(shf_transform(F_dense, spec), [lam_star], cfg.scalarization, params)[:, 0]
    feasible = hard_feasible(shf_transform(F_dense, spec))
    trace = []
    if feasible.any():
        lo, hi = S_dense[feasible].min(), S_dense[feasible].max()
        span = hi - lo if hi > lo else 1.0
        dense_ratio = np.where(np.isfinite(S_dense), np.maximum((S_dense - lo) / span, 0.0), 0.0)
        ratio_dense = np.maximum.accumulate(dense_ratio[idx]) if idx else np.empty(0)
    else:
        ratio_dense = np.zeros(len(idx))
    for i, d in enumerate(idx):
        trace.append({
            "point": i + 1,
            "dense_index": int(d),
            "ratio_oracle": float(ratio_oracle[i]),
            "ratio_dense": float(ratio_dense[i]),
        })
    return SparseOutcome(
        seed=seed,
        method=method,
        sparsifier=sparsifier,
        dense_indices=list(idx),
        saturate_size=sat_size,
        psi=psi,
        trace=trace,
        q_trace=q_trace,
        lambda_star=tuple(lam_star.weights),
    )


def selection_payload(cfg: ExperimentConfig, archive: SampleArchive, outcome: SparseOutcome) -> dict:
    return {
        "manifest": cfg.manifest_hash,
        "seed": outcome.seed,
        "method": outcome.method,
        "sparsifier": outcome.sparsifier,
        "k": cfg.k,
        "psi": outcome.psi,
        "psi_log": "natural",
        "saturate_size": outcome.saturate_size,
        "lambda_star": list(outcome.lambda_star),
        "selected": [
            {
                "dense_index": int(i),
                "t": archive.records[i].t,
                "x": archive.records[i].x.tolist(),
                "y": archive.records[i].y.tolist(),
            }
            for i in outcome.dense_indices
        ],
        "q_trace": outcome.q_trace,
    }


# ---------------------------------------------------------------- per-seed jobs


def dense_job(cfg: ExperimentConfig, method: str, seed: int, out) -> dict:
    archive = run_dense(cfg, method, seed, out)
    oracle = load_or_build_oracle(cfg, out)
    rows = dense_metrics(cfg, archive, oracle, seed)
    write_csv(dense_trace_path(out, method, seed), rows, TRACE_COLUMNS, cfg.manifest_hash)
    return {
        "seed": seed,
        "archive": str(archive_path(out, method, seed)),
        "trace": str(dense_trace_path(out, method, seed)),
        "wall_time": archive.wall_time,
    }


def metrics_job(cfg: ExperimentConfig, method: str, seed: int, out) -> dict:
    start = time.perf_counter()
    archive = load_archive(cfg, method, seed, out)
    oracle = load_or_build_oracle(cfg, out)
    rows = dense_metrics(cfg, archive, oracle, seed)
    write_csv(dense_trace_path(out, method, seed), rows, TRACE_COLUMNS, cfg.manifest_hash)
    return {"seed": seed, "trace": str(dense_trace_path(out, method, seed)), "wall_time": time.perf_counter() - start}


def sparse_job(cfg: ExperimentConfig, method: str, sparsifier: str, seed: int, out) -> dict:
    start = time.perf_counter()
    archive = load_archive(cfg, method, seed, out)
    oracle = load_or_build_oracle(cfg, out)
    outcome = run_sparse(cfg, archive, seed, oracle, method, sparsifier)
    sel_path, trace_path = sparse_paths(out, method, sparsifier, seed)
    write_json(sel_path, selection_payload(cfg, archive, outcome))
    write_csv(trace_path, outcome.trace, SPARSE_TRACE_COLUMNS, cfg.manifest_hash)
    return {
        "seed": seed,
        "selection": str(sel_path),
        "trace": str(trace_path),
        "ratio_after_view_cap": outcome.ratio_after(cfg.view_cap),
        "wall_time": time.perf_counter() - start,
    }


def e2e_job(cfg: ExperimentConfig, method: str, seed: int, out) -> dict:
    dense_info = dense_job(cfg, method, seed, out)
    sparse_info = sparse_job(cfg, method, "saturate", seed, out)
    return {"seed": seed, "method": method, "dense": dense_info, "sparse": sparse_info,
            "ratio": sparse_info["ratio_after_view_cap"],
            "wall_time": dense_info["wall_time"] + sparse_info["wall_time"]}


def map_seeds(fn, cfg: ExperimentConfig, args_per_seed: list[tuple]) -> list[dict]:
    """Run ``fn(cfg, *args)`` per entry, in worker processes when ``cfg.workers > 1``."""
    if cfg.workers <= 1 or len(args_per_seed) <= 1:
        return [fn(cfg, *a) for a in args_per_seed]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [pool.submit(fn, cfg, *a) for a in args_per_seed]
        return [f.result() for f in futures]


# ---------------------------------------------------------------- manifest


def ledger_values(cfg: ExperimentConfig) -> dict:
    """Every default in effect, including module constants that are not config keys."""
    return {
        **{k: v for k, v in cfg.to_dict().items() if k not in ("out", "workers")},
        "n_init_effective": cfg.dense_config(cfg.seeds[0]).initial_samples,
        "signal_variance_factors": list(surrogate.SIGNAL_VARIANCE_FACTORS),
        "utopia_offset": scalarize.UTOPIA_OFFSET,
        "acq_top_points": dense.TOP_POINTS,
        "acq_jitters_per_point": dense.JITTERS_PER_POINT,
        "acq_jitter_scale": dense.JITTER_SCALE,
        "distance_floor": metrics.DISTANCE_FLOOR,
        "hypervolume_mc_samples": 2**17,
        "oracle_points_effective": metrics.oracle_size(cfg.problem_obj(), cfg.oracle_points),
        "seed_streams": dict(STREAMS),
        "ucb_beta": "sqrt(0.125 * ln(2t + 1)), bonus sqrt(beta_t) * sigma",
        "psi_log": "natural",
    }


def write_manifest(cfg: ExperimentConfig, out, command: str, artifacts: list[dict]) -> Path:
    path = Path(out) / f"{command}_manifest.json"
    write_json(path, {
        "manifest": cfg.manifest_hash,
        "command": command,
        "code_version": __version__,
        "versions": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
        "config": cfg.to_dict(),
        "ledger": ledger_values(cfg),
        "artifacts": artifacts,
        "wall_times": {str(a.get("method", cfg.method)) + f"/seed{a['seed']}": a["wall_time"] for a in artifacts},
    })
    return path


# ---------------------------------------------------------------- commands


def cmd_oracle_build(cfg: ExperimentConfig, out) -> Path:
    problem = cfg.problem_obj()
    oracle = build_oracle(problem, cfg.oracle_points, cfg.oracle_seed)
    regions = RegionSets.from_spec(cfg.spec())
    for which in ("soft", "hard"):
        if len(oracle.region_front(regions, which)) == 0:
            log.warning("offline front has no point in the %s region of this configuration", which)
    path = oracle_path(out, cfg.problem)
    oracle.save(path)
    write_manifest(cfg, out, "oracle-build", [{"seed": cfg.oracle_seed, "oracle": str(path), "wall_time": 0.0}])
    return path


def cmd_dense(cfg: ExperimentConfig, out) -> dict:
    load_or_build_oracle(cfg, out)
    results = map_seeds(dense_job, cfg, [(cfg.method, s, out) for s in cfg.seeds])
    traces = [read_csv(r["trace"])[1] for r in results]
    summary = Path(out) / "dense" / cfg.method / "summary.csv"
    write_csv(summary, summarize_traces(traces), summary_columns(), cfg.manifest_hash)
    write_manifest(cfg, out, "dense", results)
    return {"summary": str(summary), "runs": results}


def cmd_metrics(cfg: ExperimentConfig, out) -> dict:
    load_or_build_oracle(cfg, out)
    for s in cfg.seeds:
        if not archive_path(out, cfg.method, s).exists():
            raise ArtifactError(f"missing archive {archive_path(out, cfg.method, s)}")
    results = map_seeds(metrics_job, cfg, [(cfg.method, s, out) for s in cfg.seeds])
    traces = [read_csv(r["trace"])[1] for r in results]
    summary = Path(out) / "dense" / cfg.method / "summary.csv"
    write_csv(summary, summarize_traces(traces), summary_columns(), cfg.manifest_hash)
    write_manifest(cfg, out, "metrics", results)
    return {"summary": str(summary), "runs": results}


def cmd_sparse(cfg: ExperimentConfig, out) -> dict:
    for s in cfg.seeds:
        if not archive_path(out, cfg.method, s).exists():
            raise ArtifactError(f"missing archive {archive_path(out, cfg.method, s)}; run the dense command first")
    load_or_build_oracle(cfg, out)
    results = map_seeds(sparse_job, cfg, [(cfg.method, cfg.sparsifier, s, out) for s in cfg.seeds])
    write_manifest(cfg, out, "sparse", results)
    return {"runs": results}


E2E_COLUMNS_FIXED = ("method", "mean", "std", "min", "max")


def cmd_e2e(cfg: ExperimentConfig, out) -> dict:
    load_or_build_oracle(cfg, out)
    jobs = [(m, s, out) for m in cfg.e2e_methods for s in cfg.seeds]
    results = map_seeds(e2e_job, cfg, jobs)
    rows = []
    for m in cfg.e2e_methods:
        vals = np.array([r["ratio"] for r in results if r["method"] == m])
        row = {"method": m, "mean": float(vals.mean()), "std": float(vals.std()),
               "min": float(vals.min()), "max": float(vals.max())}
        for s, v in zip(cfg.seeds, vals):
            row[f"seed{s}"] = float(v)
        rows.append(row)
    columns = list(E2E_COLUMNS_FIXED) + [f"seed{s}" for s in cfg.seeds]
    path = Path(out) / "e2e" / "summary.csv"
    write_csv(path, rows, columns, cfg.manifest_hash)
    write_manifest(cfg, out, "e2e", results)
    return {"summary": str(path), "rows": rows}
