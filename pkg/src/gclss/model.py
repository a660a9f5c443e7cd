"""Two-layer regression MLP with manual gradients and ranking losses.

The network is deliberately small: tanh hidden layer, linear scalar head.
Features for contrastive use are the L2-normalized hidden activations; the
head reads the raw activations.  All gradients are hand-derived because the
ranking losses need custom blackbox gradients injected at the similarity
matrix and prediction levels, and a full autodiff dependency would be
overkill for two layers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BatchTooSmall, ZeroNormFeature
from .rankdiff import DEFAULT_STEP, ranking_loss, rk

DEFAULT_HIDDEN = 100


@dataclass(frozen=True)
class LossWeights:
    """Balancing weights for the combined loss and the ranking-loss step."""

    sc: float = 1e-3
    uc: float = 1e-3
    ur: float = 1e-4
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if min(self.sc, self.uc, self.ur) < 0:
            raise ValueError("loss weights must be non-negative")
        if self.step <= 0:
            raise ValueError("ranking step must be positive")

    @property
    def auxiliary_active(self) -> bool:
        return self.sc > 0 or self.uc > 0 or self.ur > 0


@dataclass
class FeatureBatch:
    """Forward-pass results: unit-norm feature rows plus predictions.

    inputs / hidden / norms are kept so gradients can be chained back
    through the normalization and the tanh layer.
    """

    inputs: np.ndarray
    hidden: np.ndarray
    norms: np.ndarray
    features: np.ndarray
    preds: np.ndarray

    def __len__(self) -> int:
        return self.inputs.shape[0]


@dataclass
class ParamGrads:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    @classmethod
    def zeros(cls, model: "RegressionModel") -> "ParamGrads":
        return cls(
            np.zeros_like(model.w1),
            np.zeros_like(model.b1),
            np.zeros_like(model.w2),
            0.0,
        )


class RegressionModel:
    """d_in -> hidden (tanh) -> 1, with built-in Adam state."""

    def __init__(self, d_in: int, hidden: int = DEFAULT_HIDDEN, seed: int = 0):
        rng = np.random.default_rng(seed)
        bound1 = 1.0 / np.sqrt(d_in)
        bound2 = 1.0 / np.sqrt(hidden)
        self.w1 = rng.uniform(-bound1, bound1, size=(hidden, d_in))
        self.b1 = rng.uniform(-bound1, bound1, size=hidden)
        self.w2 = rng.uniform(-bound2, bound2, size=hidden)
        self.b2 = float(rng.uniform(-bound2, bound2))
        self.d_in = d_in
        self.hidden = hidden
        self.adam_step_count = 0
        self._m = ParamGrads.zeros(self)
        self._v = ParamGrads.zeros(self)

    def forward(self, x) -> FeatureBatch:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = np.tanh(x @ self.w1.T + self.b1)
        norms = np.linalg.norm(z, axis=1)
        if np.any(norms < 1e-300):
            raise ZeroNormFeature(
                "hidden activations have zero norm (symmetric or dead initialization)"
            )
        features = z / norms[:, None]
        preds = z @ self.w2 + self.b2
        return FeatureBatch(x, z, norms, features, preds)

    def predict(self, x) -> np.ndarray:
        return self.forward(x).preds

    def adam_update(
        self,
        grads: ParamGrads,
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.adam_step_count += 1
        t = self.adam_step_count
        bias1 = 1.0 - beta1**t
        bias2 = 1.0 - beta2**t
        for name in ("w1", "b1", "w2", "b2"):
            g = getattr(grads, name)
            m = getattr(self._m, name)
            v = getattr(self._v, name)
            m = beta1 * m + (1.0 - beta1) * g
            v = beta2 * v + (1.0 - beta2) * g * g
            setattr(self._m, name, m)
            setattr(self._v, name, v)
            update = lr * (m / bias1) / (np.sqrt(v / bias2) + eps)
            setattr(self, name, getattr(self, name) - update)

    # -- checkpointing ------------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "d_in": self.d_in,
            "hidden": self.hidden,
            "step": self.adam_step_count,
            "weights": {
                "w1": self.w1.tolist(),
                "b1": self.b1.tolist(),
                "w2": self.w2.tolist(),
                "b2": self.b2,
            },
            "moments": {
                "m": {
                    "w1": self._m.w1.tolist(),
                    "b1": self._m.b1.tolist(),
                    "w2": self._m.w2.tolist(),
                    "b2": self._m.b2,
                },
                "v": {
                    "w1": self._v.w1.tolist(),
                    "b1": self._v.b1.tolist(),
                    "w2": self._v.w2.tolist(),
                    "b2": self._v.b2,
                },
            },
        }

    @classmethod
    def from_state(cls, state: dict) -> "RegressionModel":
        model = cls(state["d_in"], state["hidden"], seed=0)
        w = state["weights"]
        model.w1 = np.asarray(w["w1"], dtype=float)
        model.b1 = np.asarray(w["b1"], dtype=float)
        model.w2 = np.asarray(w["w2"], dtype=float)
        model.b2 = float(w["b2"])
        model.adam_step_count = state["step"]
        for attr, payload in (("_m", state["moments"]["m"]), ("_v", state["moments"]["v"])):
            grads = getattr(model, attr)
            grads.w1 = np.asarray(payload["w1"], dtype=float)
            grads.b1 = np.asarray(payload["b1"], dtype=float)
            grads.w2 = np.asarray(payload["w2"], dtype=float)
            grads.b2 = float(payload["b2"])
        return model


def similarity(features) -> np.ndarray:
    """Cosine similarity matrix of unit-norm feature rows, exact unit diagonal."""
    if isinstance(features, FeatureBatch):
        features = features.features
    features = np.asarray(features, dtype=float)
    sim = features @ features.T
    np.fill_diagonal(sim, 1.0)
    return sim


def loss_sr(preds, labels) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. predictions."""
    preds = np.asarray(preds, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if preds.shape != labels.shape:
        raise ValueError(f"shape mismatch: {preds.shape} vs {labels.shape}")
    diff = preds - labels
    n = preds.shape[0]
    return float(np.mean(diff * diff)), (2.0 / n) * diff


def _anchor_targets(values: np.ndarray, i: int, mask: np.ndarray) -> np.ndarray:
    return rk(-np.abs(values[mask] - values[i]))


def loss_sc(sim, labels, step: float = DEFAULT_STEP) -> tuple[float, np.ndarray]:
    """Label-distance ranking consistency over each anchor's similarity row,
    averaged over anchors.  Gradient is w.r.t. the similarity entries."""
    sim = np.asarray(sim, dtype=float)
    labels = np.asarray(labels, dtype=float)
    k = labels.shape[0]
    if k < 3:
        raise BatchTooSmall(f"supervised contrastive loss needs >= 3 samples, got {k}")
    total = 0.0
    grad = np.zeros_like(sim)
    idx = np.arange(k)
    for i in range(k):
        mask = idx != i
        res = ranking_loss(sim[i, mask], _anchor_targets(labels, i, mask), step)
        total += res.loss
        grad[i, mask] += res.grad
    return total / k, grad / k


def loss_uc(sim, ranks, step: float = DEFAULT_STEP) -> tuple[float, np.ndarray]:
    """Rank-distance ranking consistency over each anchor's similarity row,
    summed over anchors.  Reversal of the rank vector leaves it unchanged."""
    sim = np.asarray(sim, dtype=float)
    ranks = np.asarray(ranks, dtype=float)
    k = ranks.shape[0]
    if k < 3:
        raise BatchTooSmall(f"unlabeled contrastive loss needs >= 3 samples, got {k}")
    total = 0.0
    grad = np.zeros_like(sim)
    idx = np.arange(k)
    for i in range(k):
        mask = idx != i
        res = ranking_loss(sim[i, mask], _anchor_targets(ranks, i, mask), step)
        total += res.loss
        grad[i, mask] += res.grad
    return total, grad


def loss_ur(preds, ranks, step: float = DEFAULT_STEP) -> tuple[float, np.ndarray]:
    """Prediction-distance vs rank-distance consistency, summed over anchors.

    Scores for anchor i are -|pred_j - pred_i|; the chain rule through the
    absolute value uses sign(0) = 0 so exact ties contribute no direction.
    """
    preds = np.asarray(preds, dtype=float)
    ranks = np.asarray(ranks, dtype=float)
    k = preds.shape[0]
    if k < 3:
        raise BatchTooSmall(f"prediction ranking loss needs >= 3 samples, got {k}")
    total = 0.0
    grad = np.zeros(k)
    idx = np.arange(k)
    for i in range(k):
        mask = idx != i
        gaps = preds[mask] - preds[i]
        res = ranking_loss(-np.abs(gaps), _anchor_targets(ranks, i, mask), step)
        total += res.loss
        signs = np.sign(gaps)
        grad[mask] += -signs * res.grad
        grad[i] += float(signs @ res.grad)
    return total, grad


def backprop(
    model: RegressionModel,
    batch: FeatureBatch,
    grads: ParamGrads,
    d_preds: np.ndarray | None = None,
    d_features: np.ndarray | None = None,
    d_sim: np.ndarray | None = None,
) -> None:
    """Accumulate parameter gradients for one batch.

    Upstream gradients may target the predictions, the normalized features,
    or the similarity matrix (converted via dF = (G + G^T) F).  The chain is
    similarity -> normalization -> tanh -> affine.
    """
    d_hidden = np.zeros_like(batch.hidden)
    if d_preds is not None:
        grads.w2 += d_preds @ batch.hidden
        grads.b2 += float(np.sum(d_preds))
        d_hidden += np.outer(d_preds, model.w2)
    d_feat = None
    if d_sim is not None:
        d_feat = (d_sim + d_sim.T) @ batch.features
    if d_features is not None:
        d_feat = d_features if d_feat is None else d_feat + d_features
    if d_feat is not None:
        inner = np.sum(d_feat * batch.features, axis=1, keepdims=True)
        d_hidden += (d_feat - batch.features * inner) / batch.norms[:, None]
    d_pre = d_hidden * (1.0 - batch.hidden * batch.hidden)
    grads.w1 += d_pre.T @ batch.inputs
    grads.b1 += d_pre.sum(axis=0)


def loss_full(
    model: RegressionModel,
    labeled: FeatureBatch,
    labels,
    weights: LossWeights,
    unlabeled: FeatureBatch | None = None,
    unlabeled_ranks=None,
    anchor_idx=None,
) -> tuple[float, ParamGrads, dict]:
    """Weighted combination of all four losses with parameter gradients.

    With all auxiliary weights zero this is exactly the supervised loss (no
    auxiliary code runs at all).  ``unlabeled`` is expected to hold only the
    samples the ranking losses should see (any selection happens upstream),
    with ``unlabeled_ranks`` their recovered ordinal ranking.
    """
    labels = np.asarray(labels, dtype=float)
    grads = ParamGrads.zeros(model)
    value, d_preds = loss_sr(labeled.preds, labels)
    parts = {"sr": value}
    d_feat_labeled = None
    if weights.sc > 0:
        if anchor_idx is None:
            anchor_idx = np.arange(len(labeled))
        anchor_idx = np.asarray(anchor_idx, dtype=int)
        anchor_features = labeled.features[anchor_idx]
        sc_value, d_sim = loss_sc(
            similarity(anchor_features), labels[anchor_idx], weights.step
        )
        parts["sc"] = sc_value
        value += weights.sc * sc_value
        d_feat_labeled = np.zeros_like(labeled.features)
        d_feat_labeled[anchor_idx] = weights.sc * ((d_sim + d_sim.T) @ anchor_features)
    backprop(model, labeled, grads, d_preds=d_preds, d_features=d_feat_labeled)
    if unlabeled is not None and (weights.uc > 0 or weights.ur > 0):
        if unlabeled_ranks is None:
            raise ValueError("unlabeled batch supplied without its ranking")
        d_preds_u = None
        d_sim_u = None
        if weights.uc > 0:
            uc_value, g = loss_uc(similarity(unlabeled), unlabeled_ranks, weights.step)
            parts["uc"] = uc_value
            value += weights.uc * uc_value
            d_sim_u = weights.uc * g
        if weights.ur > 0:
            ur_value, g = loss_ur(unlabeled.preds, unlabeled_ranks, weights.step)
            parts["ur"] = ur_value
            value += weights.ur * ur_value
            d_preds_u = weights.ur * g
        backprop(model, unlabeled, grads, d_preds=d_preds_u, d_sim=d_sim_u)
    return value, grads, parts


__all__ = [
    "DEFAULT_HIDDEN",
    "FeatureBatch",
    "LossWeights",
    "ParamGrads",
    "RegressionModel",
    "backprop",
    "loss_full",
    "loss_sc",
    "loss_sr",
    "loss_uc",
    "loss_ur",
    "similarity",
]
