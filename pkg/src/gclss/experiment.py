"""Reproducible comparison harness: anchored-seriation training vs the
supervised baseline across labeled fractions and seeds.

Every run is fully determined by (method, fraction, seed, profile): the
training pool is regenerated per seed, the splits and model init derive from
the seed, and a fixed-seed test set is shared by all runs.  Seed-level
parallelism uses spawned processes so results are identical whatever
GCLSS_THREADS says.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import GPConfig, make_dataset, split
from .metrics import MetricsReport, metric_mae, metric_r2
from .model import LossWeights
from .train import TrainConfig, train_gclss, train_supervised

DEFAULT_FRACTIONS = (0.2, 0.25, 1 / 3, 0.5)
TEST_SEED = 990_001
DATA_SEED_BASE = 770_000


@dataclass(frozen=True)
class ExperimentProfile:
    name: str
    epochs: int
    train_n: int = 1000
    test_n: int = 10_000
    val_count: int = 100
    test_carve: int = 100
    seeds: int = 10
    eval_every: int = 2000
    grid: int = 101
    length_scale: float = 0.1
    lr: float = 1e-3
    weights: LossWeights = LossWeights(sc=1e-3, uc=1e-3, ur=1e-4, step=2.0)


PROFILES = {
    "paper": ExperimentProfile(name="paper", epochs=100_000),
    "fast": ExperimentProfile(name="fast", epochs=20_000, test_n=2000, seeds=3),
}


def get_profile(name: str, **overrides) -> ExperimentProfile:
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    base = PROFILES[name]
    if overrides:
        payload = {k: getattr(base, k) for k in base.__dataclass_fields__}
        payload.update(overrides)
        return ExperimentProfile(**payload)
    return base


def _test_set(profile: ExperimentProfile):
    cfg = GPConfig(grid=profile.grid, length_scale=profile.length_scale, seed=TEST_SEED)
    ds = make_dataset(profile.test_n, cfg)
    return ds.inputs, ds.labels


def run_single(method: str, fraction: float, seed: int, profile: ExperimentProfile) -> dict:
    """Train one model and score it on the shared test set."""
    data_cfg = GPConfig(
        grid=profile.grid,
        length_scale=profile.length_scale,
        seed=DATA_SEED_BASE + seed,
    )
    pool = make_dataset(profile.train_n, data_cfg)
    parts = split(pool, fraction, seed, val_count=profile.val_count,
                  test_count=profile.test_carve)
    cfg = TrainConfig(
        epochs=profile.epochs,
        lr=profile.lr,
        weights=profile.weights if method == "gclss" else LossWeights(0.0, 0.0, 0.0),
        seed=seed,
        eval_every=profile.eval_every,
    )
    start = time.perf_counter()
    if method == "gclss":
        result = train_gclss(
            cfg,
            pool.inputs[parts.labeled],
            pool.labels[parts.labeled],
            pool.inputs[parts.unlabeled],
            pool.inputs[parts.val],
            pool.labels[parts.val],
        )
    elif method == "baseline":
        result = train_supervised(
            cfg,
            pool.inputs[parts.labeled],
            pool.labels[parts.labeled],
            pool.inputs[parts.val],
            pool.labels[parts.val],
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    x_test, y_test = _test_set(profile)
    preds = result.model.predict(x_test)
    return {
        "method": method,
        "fraction": fraction,
        "seed": seed,
        "mae": metric_mae(preds, y_test),
        "r2": metric_r2(preds, y_test),
        "runtime_seconds": time.perf_counter() - start,
        "aux_skipped": result.aux_skipped,
        "ridge_retries": result.ridge_retries,
        "final_val": result.final,
    }


def _worker(task):
    method, fraction, seed, profile = task
    return run_single(method, fraction, seed, profile)


def max_workers() -> int:
    env = os.environ.get("GCLSS_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_experiment(
    fractions=DEFAULT_FRACTIONS,
    seeds=None,
    profile: str | ExperimentProfile = "paper",
    methods=("gclss", "baseline"),
    workers: int | None = None,
) -> dict:
    """Grid of runs; returns {fraction: {method: MetricsReport-as-dict}}."""
    if isinstance(profile, str):
        profile = get_profile(profile)
    if seeds is None:
        seeds = list(range(profile.seeds))
    tasks = [
        (method, float(fraction), int(seed), profile)
        for fraction in fractions
        for method in methods
        for seed in seeds
    ]
    if workers is None:
        workers = min(max_workers(), len(tasks))
    start = time.perf_counter()
    if workers <= 1:
        rows = [_worker(task) for task in tasks]
    else:
        # spawn, not fork: workers must not inherit a warmed-up BLAS pool
        import multiprocessing as mp

        with ProcessPoolExecutor(
            max_workers=workers, mp_context=mp.get_context("spawn")
        ) as pool:
            rows = list(pool.map(_worker, tasks))
    table: dict = {}
    for row in rows:
        table.setdefault(row["fraction"], {}).setdefault(row["method"], []).append(row)
    report = {"profile": profile.name, "fractions": {}, "runs": rows}
    for fraction in sorted(table):
        report["fractions"][f"{fraction:.6g}"] = {}
        for method, per_seed in table[fraction].items():
            per_seed.sort(key=lambda r: r["seed"])
            metrics = MetricsReport(
                seeds=tuple(r["seed"] for r in per_seed),
                mae=tuple(r["mae"] for r in per_seed),
                r2=tuple(r["r2"] for r in per_seed),
                runtime_seconds=sum(r["runtime_seconds"] for r in per_seed),
            )
            report["fractions"][f"{fraction:.6g}"][method] = metrics.as_dict()
    report["runtime_seconds"] = time.perf_counter() - start
    return report


def format_table(report: dict) -> str:
    """Human-readable comparison table (stderr companion to the JSON)."""
    lines = []
    header = f"{'fraction':>10} {'method':>10} {'MAE':>18} {'R^2':>18}"
    lines.append(header)
    lines.append("-" * len(header))
    for fraction, methods in report["fractions"].items():
        for method, stats in methods.items():
            mae = f"{stats['mae_mean']:.4f}"
            if stats["mae_std"] is not None:
                mae += f" +- {stats['mae_std']:.4f}"
            r2 = f"{100 * stats['r2_mean']:.1f}%"
            if stats["r2_std"] is not None:
                r2 += f" +- {100 * stats['r2_std']:.1f}"
            lines.append(f"{fraction:>10} {method:>10} {mae:>18} {r2:>18}")
    return "\n".join(lines)


__all__ = [
    "DEFAULT_FRACTIONS",
    "ExperimentProfile",
    "PROFILES",
    "format_table",
    "get_profile",
    "max_workers",
    "run_experiment",
    "run_single",
]
