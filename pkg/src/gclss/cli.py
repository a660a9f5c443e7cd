"""Command-line interface.

All machine-readable output is JSON on stdout (or written to --out); human
tables go to stderr.  Exit codes: 0 success, 1 usage error, 2 computation
error.  An optional INI config file supplies defaults; explicit flags win.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import experiment as experiment_mod
from .bounds import check_robustness, similarity_bound
from .data import (
    GPConfig,
    load_dataset,
    make_dataset,
    save_dataset,
    split,
)
from .errors import GclssError, SingularUnlabeledBlock, TrainingDiverged
from .linalg import read_matrix_csv, read_vector_csv
from .metrics import metric_mae, metric_r2
from .mfsm import brute_select, dp_select, run_toy_trial
from .model import LossWeights, RegressionModel
from .rankdiff import rk
from .seriation import MixedBatchLayout, anchor_vector, default_ridge, seriate, seriate_mixed
from .train import TrainConfig, train_gclss, train_supervised

CONFIG_SECTIONS = {
    "train": {
        "epochs", "lr", "loss_batch", "anchor_count", "budget", "hidden",
        "seed", "eval_every", "anchor_mode", "lambda_sc", "lambda_uc",
        "lambda_ur", "lambda_step", "profile",
    },
    "experiment": {"fractions", "seeds", "profile", "methods"},
    "data": {"n", "seed", "grid", "length_scale", "labeled_frac", "val_count", "test_count"},
}


def load_config(path: str | None) -> dict:
    """Flat-section INI file -> {section: {key: str}}; unknown keys rejected."""
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise click.UsageError(f"config file not found: {path}")
    config: dict = {}
    for section in parser.sections():
        if section not in CONFIG_SECTIONS:
            raise click.UsageError(f"unknown config section [{section}]")
        known = CONFIG_SECTIONS[section]
        for key in parser[section]:
            if key not in known:
                raise click.UsageError(f"unknown key {key!r} in config section [{section}]")
        config[section] = dict(parser[section])
    return config


def emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n")
        click.echo(f"wrote {out}", err=True)
    else:
        click.echo(text)


def _pick(flag_value, config: dict, section: str, key: str, cast, default):
    """Flag beats config file beats default."""
    if flag_value is not None:
        return flag_value
    raw = config.get(section, {}).get(key)
    if raw is not None:
        return cast(raw)
    return default


@click.group()
def cli():
    """Spectral-seriation ranking toolkit and experiment harness."""


@cli.command("seriate")
@click.argument("similarity_csv", type=click.Path(exists=True))
@click.option("--labeled", "labeled", type=int, default=None,
              help="Count of labeled rows (prefix) for anchored seriation.")
@click.option("--labels", "labels_path", type=click.Path(exists=True), default=None,
              help="CSV of labels for the labeled prefix.")
@click.option("--anchor-mode", type=click.Choice(["fiedler", "label_ranks"]),
              default="fiedler", show_default=True)
@click.option("--out", type=click.Path(), default=None)
def seriate_cmd(similarity_csv, labeled, labels_path, anchor_mode, out):
    """Recover an ordinal ranking from a similarity matrix CSV."""
    sim = read_matrix_csv(similarity_csv)
    if labeled is None:
        ranks = seriate(sim)
        emit({"ranks": [int(r) for r in ranks]}, out)
        return
    if labels_path is None:
        raise click.UsageError("--labeled requires --labels")
    labels = read_vector_csv(labels_path)
    layout = MixedBatchLayout(labeled, sim.shape[0] - labeled)
    anchor = anchor_vector(sim, layout, labels, mode=anchor_mode)
    try:
        ranks, scores = seriate_mixed(sim, layout, anchor)
    except SingularUnlabeledBlock:
        ridge = default_ridge(sim, layout)
        click.echo(f"warning: singular unlabeled block, retrying with ridge {ridge:.3e}", err=True)
        ranks, scores = seriate_mixed(sim, layout, anchor, ridge=ridge)
    emit({"ranks": [int(r) for r in ranks], "scores": [float(s) for s in scores]}, out)


@cli.command()
@click.argument("variance_csv", type=click.Path(exists=True))
@click.option("--budget", type=int, required=True, help="Number of items to select.")
@click.option("--exact", is_flag=True, help="Use exhaustive search instead of the DP heuristic.")
@click.option("--out", type=click.Path(), default=None)
def select(variance_csv, budget, exact, out):
    """Select a low-variance subset from a variance matrix CSV."""
    variance = read_matrix_csv(variance_csv)
    result = (brute_select if exact else dp_select)(variance, budget)
    emit({"indices": list(result.indices), "cost": result.cost}, out)


@cli.command()
@click.argument("similarity_csv", type=click.Path(exists=True))
@click.option("--labeled", type=int, required=True)
@click.option("--out", type=click.Path(), default=None)
def bound(similarity_csv, labeled, out):
    """Perturbation tolerances for an anchored seriation instance."""
    sim = read_matrix_csv(similarity_csv)
    layout = MixedBatchLayout(labeled, sim.shape[0] - labeled)
    b = similarity_bound(sim, layout)
    payload = {
        "sim_bound": b.sim_bound,
        "feat_bound": b.feat_bound,
        "intermediates": {
            "sigma_min_cross": b.sigma_min_cross,
            "lambda_min": b.lambda_min,
            "lambda_max": b.lambda_max,
            "cross_inf_norm": b.cross_inf_norm,
            "min_gap": b.min_gap,
            "labeled": b.labeled,
            "unlabeled": b.unlabeled,
            "degenerate_gap": b.degenerate_gap,
        },
    }
    if b.labeled == b.unlabeled:
        # Square cross block: also report the spectrum-of-the-cross-block
        # reading of the intermediates for comparison.
        from .linalg import laplacian

        cross = laplacian(sim)[:b.labeled, b.labeled:]
        eigvals = np.linalg.eigvals(cross)
        payload["alt_cross_block_eigenvalues"] = {
            "real": sorted(float(v.real) for v in eigvals),
            "max_imag": float(np.max(np.abs(eigvals.imag))),
        }
    emit(payload, out)


@cli.command("robustness-sweep")
@click.argument("similarity_csv", type=click.Path(exists=True))
@click.option("--labeled", type=int, required=True)
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--scale", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def robustness_sweep(similarity_csv, labeled, trials, scale, seed, out):
    """Empirical ranking-stability check under scaled perturbations."""
    sim = read_matrix_csv(similarity_csv)
    layout = MixedBatchLayout(labeled, sim.shape[0] - labeled)
    report = check_robustness(
        sim, layout, trials=trials, scale=scale, rng=np.random.default_rng(seed)
    )
    emit(
        {
            "trials": report.trials,
            "passes": report.passes,
            "max_rank_displacement": report.max_rank_displacement,
            "scale": report.scale,
            "sim_bound": report.sim_bound,
        },
        out,
    )


@cli.command("toy-dp")
@click.option("--seeds", type=int, default=5, show_default=True)
@click.option("--n", type=int, default=25, show_default=True)
@click.option("--budget", type=int, default=10, show_default=True)
@click.option("--sigma-base", type=float, default=0.35, show_default=True)
@click.option("--sigma-step", type=float, default=0.005, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def toy_dp(seeds, n, budget, sigma_base, sigma_step, out):
    """Noise-ladder selection benchmark; prints one accuracy row per seed."""
    rows = []
    for seed in range(seeds):
        trial = run_toy_trial(seed, n=n, budget=budget,
                              sigma_base=sigma_base, sigma_step=sigma_step)
        rows.append(trial)
        click.echo(f"seed {seed}: GT {sorted(trial.quietest)}", err=True)
        click.echo(f"seed {seed}: DP {sorted(trial.selected)}  "
                   f"accuracy {trial.accuracy:.0%}", err=True)
    mean_acc = float(np.mean([t.accuracy for t in rows]))
    click.echo(f"mean accuracy over {seeds} seeds: {mean_acc:.0%}", err=True)
    emit(
        {
            "seeds": seeds,
            "accuracy": [t.accuracy for t in rows],
            "mean_accuracy": mean_acc,
            "selected": [list(t.selected) for t in rows],
            "ground_truth": [list(t.quietest) for t in rows],
        },
        out,
    )


@cli.command("gen-data")
@click.option("--n", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--grid", type=int, default=101, show_default=True)
@click.option("--length-scale", type=float, default=0.1, show_default=True)
@click.option("--labeled-frac", type=float, default=0.5, show_default=True)
@click.option("--val-count", type=int, default=100, show_default=True)
@click.option("--test-count", type=int, default=100, show_default=True)
@click.option("--out", "outdir", type=click.Path(), required=True)
def gen_data(n, seed, grid, length_scale, labeled_frac, val_count, test_count, outdir):
    """Generate a synthetic dataset directory (inputs/labels/split/meta)."""
    cfg = GPConfig(grid=grid, length_scale=length_scale, seed=seed)
    ds = make_dataset(n, cfg)
    indices = split(ds, labeled_frac, seed, val_count=val_count, test_count=test_count)
    save_dataset(ds, outdir, indices)
    emit(
        {
            "out": str(outdir),
            "n": n,
            "labeled": len(indices.labeled),
            "unlabeled": len(indices.unlabeled),
            "val": len(indices.val),
            "test": len(indices.test),
            "label_mean": float(np.mean(ds.labels)),
        },
        None,
    )


def _train_config_from(config: dict, epochs, lr, seed, budget, profile) -> TrainConfig:
    section = config.get("train", {})
    profile = _pick(profile, config, "train", "profile", str, "paper")
    default_epochs = 100_000 if profile == "paper" else 20_000
    weights = LossWeights(
        sc=float(section.get("lambda_sc", 1e-3)),
        uc=float(section.get("lambda_uc", 1e-3)),
        ur=float(section.get("lambda_ur", 1e-4)),
        step=float(section.get("lambda_step", 2.0)),
    )
    return TrainConfig(
        epochs=_pick(epochs, config, "train", "epochs", int, default_epochs),
        lr=_pick(lr, config, "train", "lr", float, 1e-3),
        weights=weights,
        loss_batch=int(section.get("loss_batch", 8)),
        anchor_count=int(section.get("anchor_count", 8)),
        budget=_pick(budget, config, "train", "budget", int, 6),
        hidden=int(section.get("hidden", 100)),
        seed=_pick(seed, config, "train", "seed", int, 0),
        eval_every=int(section.get("eval_every", 1000)),
        anchor_mode=section.get("anchor_mode", "fiedler"),
    )


@cli.command()
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True,
              help="Dataset directory from gen-data.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--baseline", is_flag=True, help="Supervised-only run (all auxiliary weights zero).")
@click.option("--epochs", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--budget", type=int, default=None)
@click.option("--profile", type=click.Choice(["paper", "fast"]), default=None)
@click.option("--checkpoint", type=click.Path(), default=None,
              help="Where to write the final model state JSON.")
@click.option("--metrics-log", type=click.Path(), default=None,
              help="Where to write the step/loss/val CSV log.")
@click.option("--out", type=click.Path(), default=None)
def train(data_dir, config_path, baseline, epochs, lr, seed, budget, profile,
          checkpoint, metrics_log, out):
    """Train on a generated dataset; reports val/test metrics."""
    config = load_config(config_path)
    cfg = _train_config_from(config, epochs, lr, seed, budget, profile)
    if baseline:
        cfg = dataclasses.replace(cfg, weights=LossWeights(0.0, 0.0, 0.0))
    ds, indices = load_dataset(data_dir)
    if indices is None:
        raise click.UsageError(f"{data_dir} has no split.json")
    try:
        result = train_gclss(
            cfg,
            ds.inputs[indices.labeled],
            ds.labels[indices.labeled],
            ds.inputs[indices.unlabeled],
            ds.inputs[indices.val],
            ds.labels[indices.val],
        )
    except TrainingDiverged as exc:
        dump = Path(data_dir) / f"diverged_step{exc.step}.json"
        dump.write_text(json.dumps({"step": exc.step, "config": str(cfg)}))
        click.echo(f"training diverged at step {exc.step}; state dumped to {dump}", err=True)
        raise
    preds = result.model.predict(ds.inputs[indices.test])
    payload = {
        "config": {"epochs": cfg.epochs, "lr": cfg.lr, "seed": cfg.seed,
                   "budget": cfg.budget, "baseline": baseline},
        "test_mae": metric_mae(preds, ds.labels[indices.test]),
        "test_r2": metric_r2(preds, ds.labels[indices.test]),
        "final": result.final,
        "aux_skipped": result.aux_skipped,
        "ridge_retries": result.ridge_retries,
    }
    if checkpoint:
        Path(checkpoint).write_text(json.dumps(result.model.state_dict()))
    if metrics_log:
        with open(metrics_log, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "train_loss", "val_mae", "val_r2"])
            for record in result.history:
                writer.writerow([
                    record["step"], record["train_loss"],
                    record.get("val_mae", ""), record.get("val_r2", ""),
                ])
    emit(payload, out)


@cli.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--split-name", type=click.Choice(["test", "val"]), default="test",
              show_default=True)
@click.option("--out", type=click.Path(), default=None)
def eval_cmd(checkpoint, data_dir, split_name, out):
    """Evaluate a checkpoint on a dataset split."""
    model = RegressionModel.from_state(json.loads(Path(checkpoint).read_text()))
    ds, indices = load_dataset(data_dir)
    if indices is None:
        raise click.UsageError(f"{data_dir} has no split.json")
    idx = getattr(indices, split_name)
    preds = model.predict(ds.inputs[idx])
    emit(
        {
            "split": split_name,
            "count": len(idx),
            "mae": metric_mae(preds, ds.labels[idx]),
            "r2": metric_r2(preds, ds.labels[idx]),
        },
        out,
    )


@cli.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--profile", type=click.Choice(["paper", "fast"]), default=None)
@click.option("--fractions", type=str, default=None,
              help="Comma-separated labeled fractions, e.g. '0.2,0.25,0.3333,0.5'.")
@click.option("--seeds", type=int, default=None, help="Number of seeds (0..k-1).")
@click.option("--epochs", type=int, default=None, help="Override profile epochs.")
@click.option("--workers", type=int, default=None,
              help="Parallel runs; default min(GCLSS_THREADS or cpu count, tasks).")
@click.option("--out", type=click.Path(), default=None)
def experiment(config_path, profile, fractions, seeds, epochs, workers, out):
    """Run the full comparison (anchored training vs supervised baseline)."""
    config = load_config(config_path)
    profile_name = _pick(profile, config, "experiment", "profile", str, "paper")
    overrides = {}
    if epochs is not None:
        overrides["epochs"] = epochs
    prof = experiment_mod.get_profile(profile_name, **overrides)
    fractions_str = _pick(fractions, config, "experiment", "fractions", str, None)
    fraction_values = (
        tuple(float(tok) for tok in fractions_str.split(",") if tok.strip())
        if fractions_str
        else experiment_mod.DEFAULT_FRACTIONS
    )
    seed_count = _pick(seeds, config, "experiment", "seeds", int, prof.seeds)
    report = experiment_mod.run_experiment(
        fractions=fraction_values,
        seeds=list(range(seed_count)),
        profile=prof,
        workers=workers,
    )
    click.echo(experiment_mod.format_table(report), err=True)
    emit(report, out)


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except GclssError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
