"""Ranking operator and a differentiable ranking-similarity loss.

The loss compares the ranking of a score vector against a target rank
permutation with a mean squared rank difference.  Ranking is piecewise
constant, so the gradient comes from a blackbox combinatorial scheme: re-rank
at a step-perturbed score vector and difference the two rankings.  With the
ascending rank convention used throughout this package the perturbation must
move *against* the incoming rank gradient, otherwise scores are pushed apart
in their current (wrong) order and the differenced gradient is identically
zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStep

DEFAULT_STEP = 2.0


def rk(values) -> np.ndarray:
    """Ascending ranks of a score vector: rank 0 is the smallest value.

    Ties are broken by index, so the output is always a permutation of
    0..n-1.  Invariant under any strictly increasing transform of the input.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError(f"expected a 1-D score vector, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("scores contain NaN or Inf")
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.int64)
    ranks[order] = np.arange(values.shape[0])
    return ranks


def is_rank_vector(ranks) -> bool:
    ranks = np.asarray(ranks)
    return bool(
        ranks.ndim == 1
        and np.array_equal(np.sort(ranks), np.arange(ranks.shape[0]))
    )


@dataclass(frozen=True)
class RankLossResult:
    """loss >= 0; grad has the same length as the score input and is the
    zero vector whenever the ranking already matches the target."""

    loss: float
    grad: np.ndarray


def ranking_loss(scores, target, step: float = DEFAULT_STEP) -> RankLossResult:
    """Mean squared difference between ``rk(scores)`` and a target ranking.

    Backward pass: with g the gradient of the loss w.r.t. the rank vector,
    re-rank at ``scores - step * g`` and return
    ``(rk(scores) - rk(scores - step * g)) / step``.  A descent step on this
    gradient moves the scores toward the target order; a step too small
    relative to the score gaps yields a zero gradient.
    """
    if step <= 0:
        raise InvalidStep(f"step must be positive, got {step}")
    scores = np.asarray(scores, dtype=float)
    target = np.asarray(target)
    if scores.shape != target.shape:
        raise ValueError(
            f"scores and target lengths differ: {scores.shape} vs {target.shape}"
        )
    n = scores.shape[0]
    ranks = rk(scores)
    diff = ranks.astype(float) - target.astype(float)
    loss = float(np.mean(diff * diff)) if n else 0.0
    if loss == 0.0:
        return RankLossResult(0.0, np.zeros(n))
    g = (2.0 / n) * diff
    perturbed = rk(scores - step * g)
    grad = (ranks - perturbed) / step
    return RankLossResult(loss, grad)


__all__ = ["DEFAULT_STEP", "RankLossResult", "is_rank_vector", "ranking_loss", "rk"]
