"""Evaluation metrics and multi-seed report aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedR2


def metric_mae(preds, truth) -> float:
    preds = np.asarray(preds, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if preds.shape != truth.shape:
        raise ValueError(f"shape mismatch: {preds.shape} vs {truth.shape}")
    return float(np.mean(np.abs(preds - truth)))


def metric_r2(preds, truth) -> float:
    """1 - SS_res / SS_tot; undefined when the truth has zero variance."""
    preds = np.asarray(preds, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if preds.shape != truth.shape:
        raise ValueError(f"shape mismatch: {preds.shape} vs {truth.shape}")
    if truth.shape[0] < 2:
        raise ValueError("R^2 needs at least two points")
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedR2("truth values have zero variance")
    ss_res = float(np.sum((truth - preds) ** 2))
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class MetricsReport:
    """Per-seed values with mean and (for >= 2 seeds) sample std."""

    seeds: tuple[int, ...]
    mae: tuple[float, ...]
    r2: tuple[float, ...]
    runtime_seconds: float

    @property
    def mae_mean(self) -> float:
        return float(np.mean(self.mae))

    @property
    def mae_std(self) -> float | None:
        return float(np.std(self.mae, ddof=1)) if len(self.mae) >= 2 else None

    @property
    def r2_mean(self) -> float:
        return float(np.mean(self.r2))

    @property
    def r2_std(self) -> float | None:
        return float(np.std(self.r2, ddof=1)) if len(self.r2) >= 2 else None

    def as_dict(self) -> dict:
        return {
            "seeds": list(self.seeds),
            "mae": list(self.mae),
            "r2": list(self.r2),
            "mae_mean": self.mae_mean,
            "mae_std": self.mae_std,
            "r2_mean": self.r2_mean,
            "r2_std": self.r2_std,
            "runtime_seconds": self.runtime_seconds,
        }


__all__ = ["MetricsReport", "metric_mae", "metric_r2"]
