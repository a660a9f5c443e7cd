"""Semi-supervised training loop combining all the pieces.

Each step runs the supervised loss on the full labeled batch and the ranking
losses on a small cached unlabeled batch.  Unlabeled batches flow through a
one-step pipeline so the stability selection always measures the exact batch
it will gate:

  * the batch used at step t was forwarded at the end of step t-1 (under the
    parameters step t starts with), together with the subset selection
    measured for it;
  * after step t's update the incoming batch is re-forwarded, the four
    cross-similarity matrices of its pre/post-update features give the
    variance matrix, and the selection for step t+1 falls out;
  * a freshly sampled batch is then forwarded once to prime the next
    measurement.

The first step has no measured selection yet and uses its full batch.  When
every auxiliary weight is zero none of this machinery runs and the loop is a
plain supervised regression, bit-identical to one.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import GclssError, SingularUnlabeledBlock, TrainingDiverged
from .metrics import metric_mae, metric_r2
from .mfsm import cross_similarities, dp_select, variance_matrix
from .model import (
    DEFAULT_HIDDEN,
    FeatureBatch,
    LossWeights,
    RegressionModel,
    loss_full,
    similarity,
)
from .seriation import MixedBatchLayout, anchor_vector, default_ridge, seriate_mixed


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100_000
    lr: float = 1e-3
    weights: LossWeights = field(default_factory=LossWeights)
    loss_batch: int = 8
    anchor_count: int = 8
    budget: int = 6
    hidden: int = DEFAULT_HIDDEN
    seed: int = 0
    eval_every: int = 1000
    anchor_mode: str = "fiedler"


@dataclass
class TrainResult:
    model: RegressionModel
    history: list[dict]
    aux_skipped: int = 0
    ridge_retries: int = 0

    @property
    def final(self) -> dict:
        return self.history[-1] if self.history else {}


def _evaluate(model, x_val, y_val) -> tuple[float, float]:
    preds = model.predict(x_val)
    return metric_mae(preds, y_val), metric_r2(preds, y_val)


def train_supervised(
    cfg: TrainConfig, x_labeled, y_labeled, x_val=None, y_val=None
) -> TrainResult:
    """Plain full-batch supervised regression (the degenerate configuration)."""
    x_labeled = np.asarray(x_labeled, dtype=float)
    y_labeled = np.asarray(y_labeled, dtype=float)
    model = RegressionModel(x_labeled.shape[1], cfg.hidden, seed=cfg.seed)
    history: list[dict] = []
    for step in range(cfg.epochs):
        value, grads, _ = loss_full(
            model, model.forward(x_labeled), y_labeled, LossWeights(0.0, 0.0, 0.0)
        )
        if not np.isfinite(value):
            raise TrainingDiverged(f"loss became {value} at step {step}", step=step)
        model.adam_update(grads, cfg.lr)
        if (step + 1) % cfg.eval_every == 0 or step + 1 == cfg.epochs:
            record = {"step": step + 1, "train_loss": value}
            if x_val is not None:
                record["val_mae"], record["val_r2"] = _evaluate(model, x_val, y_val)
            history.append(record)
    return TrainResult(model, history)


def _seriate_batch(
    anchor_features: np.ndarray,
    anchor_labels: np.ndarray,
    unlabeled_features: np.ndarray,
    mode: str,
) -> tuple[np.ndarray, bool]:
    """Anchored ranking of the unlabeled features; returns (ranks, used_ridge)."""
    layout = MixedBatchLayout(anchor_features.shape[0], unlabeled_features.shape[0])
    mixed = similarity(np.vstack([anchor_features, unlabeled_features]))
    anchor = anchor_vector(mixed, layout, anchor_labels, mode=mode)
    try:
        ranks, _ = seriate_mixed(mixed, layout, anchor)
        return ranks, False
    except SingularUnlabeledBlock:
        ridge = default_ridge(mixed, layout)
        ranks, _ = seriate_mixed(mixed, layout, anchor, ridge=ridge)
        return ranks, True


def train_gclss(
    cfg: TrainConfig,
    x_labeled,
    y_labeled,
    x_unlabeled,
    x_val=None,
    y_val=None,
) -> TrainResult:
    """Full training loop with contrastive and ranking supervision.

    Falls back to :func:`train_supervised` when all auxiliary weights are
    zero so the degenerate configuration stays bit-identical to a plain
    supervised loop.  Auxiliary failures inside a step (degenerate spectra
    under extreme parameter states) skip that step's auxiliary terms and are
    counted, never fatal; NaN loss aborts with the step index attached.
    """
    if not cfg.weights.auxiliary_active:
        return train_supervised(cfg, x_labeled, y_labeled, x_val, y_val)
    x_labeled = np.asarray(x_labeled, dtype=float)
    y_labeled = np.asarray(y_labeled, dtype=float)
    x_unlabeled = np.asarray(x_unlabeled, dtype=float)
    n_labeled = x_labeled.shape[0]
    n_unlabeled = x_unlabeled.shape[0]
    batch_size = min(cfg.loss_batch, n_unlabeled)
    anchor_count = min(cfg.anchor_count, n_labeled)
    budget = min(cfg.budget, batch_size)
    if (cfg.weights.uc > 0 or cfg.weights.ur > 0) and budget < 3:
        raise ValueError(f"ranking losses need a selection budget >= 3, got {budget}")
    if cfg.weights.sc > 0 and anchor_count < 3:
        raise ValueError(f"contrastive loss needs >= 3 anchors, got {anchor_count}")
    rng = np.random.default_rng(cfg.seed)
    model = RegressionModel(x_labeled.shape[1], cfg.hidden, seed=cfg.seed)

    # Prime the pipeline: current batch (full, no selection yet) and the
    # incoming batch with its pre-update features.
    cur_batch = model.forward(x_unlabeled[rng.choice(n_unlabeled, size=batch_size, replace=False)])
    cur_sel = np.arange(batch_size)
    nxt_idx = rng.choice(n_unlabeled, size=batch_size, replace=False)
    nxt_features_pre = model.forward(x_unlabeled[nxt_idx]).features

    history: list[dict] = []
    aux_skipped = 0
    ridge_retries = 0
    for step in range(cfg.epochs):
        labeled_batch = model.forward(x_labeled)
        anchors = rng.choice(n_labeled, size=anchor_count, replace=False)
        selected = FeatureBatch(
            cur_batch.inputs[cur_sel],
            cur_batch.hidden[cur_sel],
            cur_batch.norms[cur_sel],
            cur_batch.features[cur_sel],
            cur_batch.preds[cur_sel],
        )
        ranks = None
        try:
            ranks, used_ridge = _seriate_batch(
                labeled_batch.features[anchors],
                y_labeled[anchors],
                selected.features,
                cfg.anchor_mode,
            )
            ridge_retries += int(used_ridge)
        except GclssError:
            aux_skipped += 1
        if ranks is not None:
            value, grads, _ = loss_full(
                model,
                labeled_batch,
                y_labeled,
                cfg.weights,
                unlabeled=selected,
                unlabeled_ranks=ranks,
                anchor_idx=anchors,
            )
        else:
            value, grads, _ = loss_full(
                model, labeled_batch, y_labeled, LossWeights(0.0, 0.0, 0.0, cfg.weights.step)
            )
        if not np.isfinite(value):
            raise TrainingDiverged(f"loss became {value} at step {step}", step=step)
        model.adam_update(grads, cfg.lr)

        # Measure the incoming batch across this update and rotate.
        nxt_batch = model.forward(x_unlabeled[nxt_idx])
        variance = variance_matrix(
            cross_similarities(nxt_features_pre, nxt_batch.features)
        )
        cur_batch = nxt_batch
        cur_sel = np.asarray(dp_select(variance, budget).indices, dtype=int)
        nxt_idx = rng.choice(n_unlabeled, size=batch_size, replace=False)
        nxt_features_pre = model.forward(x_unlabeled[nxt_idx]).features

        if (step + 1) % cfg.eval_every == 0 or step + 1 == cfg.epochs:
            record = {"step": step + 1, "train_loss": value}
            if x_val is not None:
                record["val_mae"], record["val_r2"] = _evaluate(model, x_val, y_val)
            history.append(record)
    return TrainResult(model, history, aux_skipped, ridge_retries)


def config_dict(cfg: TrainConfig) -> dict:
    payload = asdict(cfg)
    payload["weights"] = asdict(cfg.weights)
    return payload


__all__ = ["TrainConfig", "TrainResult", "config_dict", "train_gclss", "train_supervised"]
