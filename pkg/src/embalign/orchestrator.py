"""Multi-seed stochastic restarts, best-run selection, and run statistics.

Seeding rule: run k draws its identity from master_seed + k, and splits that
into independent streams for the two PCA sketches and the batch shuffling.
Disabling a stochasticity source replaces the per-run stream with the
master-seed stream shared by every run.
"""
from __future__ import annotations

import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .config import PipelineConfig
from .errors import AllRunsFailed, ClampedParameterWarning, IoFailure
from .icp import RunRecord, TransformPair, run_stage
from .linalg import project, randomized_pca


@dataclass
class StochasticityPolicy:
    """Which run-to-run diversity sources are active."""

    randomize_pca: bool = True
    randomize_order: bool = True


@dataclass
class SelectionResult:
    """Best run plus the confidence signal derived from the cohort."""

    record: RunRecord
    best_loss: float
    median_loss: float
    ratio: float
    low_confidence: bool


@dataclass
class AlignResult:
    """Everything the end-to-end alignment produces."""

    pca_records: list[RunRecord]
    selection: SelectionResult
    raw_record: RunRecord


def derive_seeds(seed: int, n: int) -> list[int]:
    """Split one integer seed into n independent stream seeds."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(child.generate_state(1, np.uint64)[0]) for child in children]


def _effective_pca_dim(X: np.ndarray, Y: np.ndarray, config: PipelineConfig) -> int:
    p = min(config.pca_dim, X.shape[1], len(X), len(Y))
    if p < config.pca_dim:
        warnings.warn(
            f"pca_dim reduced from {config.pca_dim} to {p} to fit the data",
            ClampedParameterWarning,
        )
    return p


def _project_pair(X, Y, p, seed_x, seed_y, config):
    model_x = randomized_pca(
        X, p, seed_x, config.pca_oversample, config.pca_power_iters
    )
    model_y = randomized_pca(
        Y, p, seed_y, config.pca_oversample, config.pca_power_iters
    )
    common = min(model_x.p, model_y.p)
    xp = project(model_x, X)[:, :common]
    yp = project(model_y, Y)[:, :common]
    return xp, yp


def _execute_run(k, X, Y, config, policy, p, master_streams, shared_projection):
    run_seed = config.seed + k
    run_streams = derive_seeds(run_seed, 3)
    order_seed = run_streams[2] if policy.randomize_order else master_streams[2]
    if shared_projection is not None:
        xp, yp = shared_projection
    else:
        xp, yp = _project_pair(
            X, Y, p, run_streams[0], run_streams[1], config
        )
    record = run_stage(
        xp, yp,
        TransformPair.identity(xp.shape[1]),
        config.pca_stage(),
        order_seed,
        stage="pca",
    )
    record.seed = run_seed
    return record


_WORKER = {}


def _init_worker(payload):
    _WORKER["payload"] = payload


def _run_index(k):
    return _execute_run(k, *_WORKER["payload"])


def run_many(
    X_raw: np.ndarray,
    Y_raw: np.ndarray,
    config: PipelineConfig,
    n_runs: int,
    policy: StochasticityPolicy | None = None,
    parallelism: int = 1,
    early_stop: bool = False,
    stop_threshold: float = 0.5,
    min_runs: int = 10,
) -> list[RunRecord]:
    """Execute n_runs seeded reduced-space runs and return them in seed order.

    With randomize_pca off, one shared projection (seeded by the master seed)
    feeds every run; with randomize_order off, every run shuffles batches
    with the master-seed stream. Early stopping is honored only in serial
    mode; parallel execution keeps the fixed seed-to-record assignment.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if policy is None:
        policy = StochasticityPolicy()
    if n_runs > 1 and not (policy.randomize_pca or policy.randomize_order):
        warnings.warn(
            "both stochasticity sources disabled: all runs will be identical",
            UserWarning,
        )
    X_raw = np.ascontiguousarray(X_raw, dtype=np.float64)
    Y_raw = np.ascontiguousarray(Y_raw, dtype=np.float64)
    p = _effective_pca_dim(X_raw, Y_raw, config)
    master_streams = derive_seeds(config.seed, 3)
    shared_projection = None
    if not policy.randomize_pca:
        shared_projection = _project_pair(
            X_raw, Y_raw, p, master_streams[0], master_streams[1], config
        )

    payload = (X_raw, Y_raw, config, policy, p, master_streams, shared_projection)
    records: list[RunRecord] = []
    if parallelism <= 1 or n_runs == 1:
        for k in range(n_runs):
            records.append(_execute_run(k, *payload))
            if early_stop and early_stop_poll(records, stop_threshold, min_runs):
                break
    else:
        with ProcessPoolExecutor(
            max_workers=parallelism, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            records = list(pool.map(_run_index, range(n_runs), chunksize=1))

    if not any(r.converged for r in records):
        raise AllRunsFailed(f"all {len(records)} runs diverged")
    return records


def select_best(records: list[RunRecord]) -> SelectionResult:
    """Pick the converged record with the smallest reconstruction criterion.

    The best/median loss ratio is the unsupervised confidence signal; above
    0.5 the selection is flagged low-confidence (a lone record always is).
    """
    usable = [r for r in records if r.converged and np.isfinite(r.final_loss)]
    if not usable:
        raise AllRunsFailed("no converged run to select from")
    best = min(usable, key=lambda r: r.final_loss)
    median = float(np.median([r.final_loss for r in usable]))
    if median > 0:
        ratio = best.final_loss / median
    else:
        ratio = 1.0
    return SelectionResult(
        record=best,
        best_loss=best.final_loss,
        median_loss=median,
        ratio=ratio,
        low_confidence=ratio > 0.5,
    )


def reporting_convergence(records: list[RunRecord], ratio: float = 0.5) -> np.ndarray:
    """Boolean flags under the reporting rule: loss below ratio * cohort median."""
    losses = np.array([r.final_loss for r in records], dtype=np.float64)
    usable = np.isfinite(losses) & np.array([r.converged for r in records])
    if not usable.any():
        return np.zeros(len(records), dtype=bool)
    median = np.median(losses[usable])
    return usable & (losses < ratio * median)


def early_stop_poll(
    records: list[RunRecord], threshold_ratio: float = 0.5, min_runs: int = 10
) -> bool:
    """True once enough runs finished and one sits clearly below the median."""
    if len(records) < min_runs:
        return False
    losses = np.array(
        [r.final_loss for r in records if r.converged and np.isfinite(r.final_loss)]
    )
    if losses.size == 0:
        return False
    return bool(losses.min() < threshold_ratio * np.median(losses))


def export_run_stats(records: list[RunRecord], path) -> None:
    """One CSV row per record: seed, stage, final_loss, converged."""
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["seed", "stage", "final_loss", "converged"])
            for r in records:
                writer.writerow(
                    [
                        r.seed,
                        r.stage,
                        repr(float(r.final_loss)),
                        "true" if r.converged else "false",
                    ]
                )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_checkpoints(records: list[RunRecord], directory) -> None:
    """Persist one transform and one map file per converged run, named by seed."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for r in records:
        if not r.converged:
            continue
        io.save_transform(r.transforms, directory / f"seed_{r.seed}.transform.txt")
        io.save_map(r.cmap, directory / f"seed_{r.seed}.map.txt")


def align_pipeline(
    X_raw: np.ndarray,
    Y_raw: np.ndarray,
    config: PipelineConfig,
    parallelism: int = 1,
) -> AlignResult:
    """Full unsupervised alignment: restarts, selection, full-dim refinement.

    The refinement run is seeded with master_seed + n_runs, the next unused
    run seed, and is initialized from the selected run's correspondences.
    """
    policy = StochasticityPolicy(
        randomize_pca=config.randomize_pca,
        randomize_order=config.randomize_order,
    )
    records = run_many(
        X_raw, Y_raw, config, config.runs, policy, parallelism=parallelism
    )
    selection = select_best(records)
    raw_seed = config.seed + config.runs
    raw_order = derive_seeds(raw_seed, 3)[2]
    raw_record = run_stage(
        X_raw, Y_raw,
        selection.record.cmap,
        config.raw_stage(),
        raw_order,
        stage="raw",
    )
    raw_record.seed = raw_seed
    return AlignResult(
        pca_records=records, selection=selection, raw_record=raw_record
    )
