"""Synthetic operator-learning dataset on the unit interval.

A log-diffusion coefficient field is drawn from a Gaussian process with an
RBF kernel, the conservative elliptic problem

    -d/dz ( exp(b(z)) du/dz ) = f,   u(0) = u(1) = 0

is solved with second-order finite differences, and each sample pairs the
coefficient values at the grid sensors (the model input) with the solution
value at a probe point (the scalar regression label).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from .errors import DataNotFound, GclssError, InvalidFraction, KernelNotPD

DEFAULT_FORCING = 10.0
DEFAULT_PROBE = 0.5
JITTER_LADDER = (1e-10, 1e-8, 1e-6)


@dataclass(frozen=True)
class GPConfig:
    """Gaussian-process prior for the log-coefficient field.

    grid counts the sensors including both boundary points, so grids of the
    form 50k + 1 nest into each other and odd grids place a sensor exactly
    at the midpoint probe.
    """

    grid: int = 101
    length_scale: float = 0.1
    variance: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.grid < 3:
            raise ValueError(f"grid must be >= 3, got {self.grid}")
        if self.length_scale <= 0:
            raise ValueError(f"length_scale must be positive, got {self.length_scale}")


def gp_cholesky(cfg: GPConfig) -> np.ndarray:
    """Cholesky factor of the RBF kernel on the sensor grid, with jitter
    escalation before giving up."""
    z = np.linspace(0.0, 1.0, cfg.grid)
    d2 = (z[:, None] - z[None, :]) ** 2
    kernel = cfg.variance * np.exp(-d2 / (2.0 * cfg.length_scale**2))
    for jitter in JITTER_LADDER:
        try:
            return np.linalg.cholesky(kernel + jitter * np.eye(cfg.grid))
        except np.linalg.LinAlgError:
            continue
    raise KernelNotPD(
        f"kernel not positive definite after jitter up to {JITTER_LADDER[-1]:.0e}"
    )


def sample_gp(cfg: GPConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """One zero-mean draw of the log-coefficient field on the grid."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    chol = gp_cholesky(cfg)
    return chol @ rng.standard_normal(cfg.grid)


def solve_spde(b_values, forcing: float = DEFAULT_FORCING) -> np.ndarray:
    """Solve the 1-D conservative elliptic problem for a log-coefficient field.

    Conservative second-order scheme with half-point coefficients
    a_{i+1/2} = exp((b_i + b_{i+1}) / 2) on a uniform grid, zero Dirichlet
    boundaries, tridiagonal solve.  The assembled system is positive definite
    for finite b, so a large residual can only mean a broken assembly; it is
    guarded, not expected.
    """
    b = np.asarray(b_values, dtype=float).reshape(-1)
    grid = b.shape[0]
    if grid < 3:
        raise ValueError(f"grid must be >= 3, got {grid}")
    if not np.all(np.isfinite(b)):
        raise ValueError("coefficient field contains NaN or Inf")
    h = 1.0 / (grid - 1)
    a_half = np.exp(0.5 * (b[:-1] + b[1:]))  # a_{i+1/2}, length grid-1
    inv_h2 = 1.0 / (h * h)
    diag = (a_half[:-1] + a_half[1:]) * inv_h2
    off = -a_half[1:-1] * inv_h2
    interior = grid - 2
    banded = np.zeros((3, interior))
    banded[0, 1:] = off
    banded[1, :] = diag
    banded[2, :-1] = off
    rhs = np.full(interior, forcing)
    inner = solve_banded((1, 1), banded, rhs)
    residual = np.abs(
        diag * inner
        + np.concatenate(([0.0], off * inner[:-1]))
        + np.concatenate((off * inner[1:], [0.0]))
        - rhs
    ).max()
    if residual > 1e-8 * max(1.0, float(np.max(diag))):
        raise GclssError(f"tridiagonal solve residual {residual:.3e} unexpectedly large")
    u = np.zeros(grid)
    u[1:-1] = inner
    return u


def solution_at(u_values, probe: float) -> float:
    grid = len(u_values)
    z = np.linspace(0.0, 1.0, grid)
    return float(np.interp(probe, z, u_values))


@dataclass
class RegressionDataset:
    """Inputs are coefficient fields sampled at the sensors; labels are the
    solution value at the probe point."""

    inputs: np.ndarray
    labels: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.inputs.shape[0]


def make_dataset(
    n: int,
    cfg: GPConfig,
    probe: float = DEFAULT_PROBE,
    forcing: float = DEFAULT_FORCING,
) -> RegressionDataset:
    """n independent samples; per-sample RNG streams spawned from cfg.seed so
    generation order (or parallel generation) cannot change the data."""
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    chol = gp_cholesky(cfg)
    children = np.random.SeedSequence(cfg.seed).spawn(n)
    inputs = np.empty((n, cfg.grid))
    labels = np.empty(n)
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        b = chol @ rng.standard_normal(cfg.grid)
        inputs[i] = b
        labels[i] = solution_at(solve_spde(b, forcing), probe)
    meta = {
        "n": n,
        "grid": cfg.grid,
        "length_scale": cfg.length_scale,
        "variance": cfg.variance,
        "seed": cfg.seed,
        "probe": probe,
        "forcing": forcing,
    }
    return RegressionDataset(inputs, labels, meta)


@dataclass(frozen=True)
class SplitIndices:
    labeled: np.ndarray
    unlabeled: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def as_dict(self) -> dict:
        return {
            "labeled": self.labeled.tolist(),
            "unlabeled": self.unlabeled.tolist(),
            "val": self.val.tolist(),
            "test": self.test.tolist(),
        }


def split(
    ds: RegressionDataset,
    labeled_fraction: float,
    seed: int,
    val_count: int = 100,
    test_count: int = 100,
) -> SplitIndices:
    """Disjoint labeled/unlabeled/val/test index sets, deterministic per seed.

    The labeled fraction applies to the full dataset first; val and test are
    then carved out of the unlabeled pool, so the labeled count matches
    round(fraction * n) exactly.
    """
    n = len(ds)
    if not 0.0 < labeled_fraction < 1.0:
        raise InvalidFraction(f"labeled fraction must be in (0,1), got {labeled_fraction}")
    n_labeled = int(round(labeled_fraction * n))
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    labeled = order[:n_labeled]
    pool = order[n_labeled:]
    n_unlabeled = pool.shape[0] - val_count - test_count
    if n_labeled < 1 or val_count < 1 or test_count < 1 or n_unlabeled < 1:
        raise InvalidFraction(
            f"split leaves an empty part: labeled={n_labeled}, "
            f"unlabeled={n_unlabeled}, val={val_count}, test={test_count}"
        )
    return SplitIndices(
        labeled=np.sort(labeled),
        unlabeled=np.sort(pool[val_count + test_count:]),
        val=np.sort(pool[:val_count]),
        test=np.sort(pool[val_count:val_count + test_count]),
    )


# ---------------------------------------------------------------------------
# On-disk layout: inputs.csv, labels.csv, split.json, meta.json.

def save_dataset(ds: RegressionDataset, outdir, indices: SplitIndices | None = None) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "inputs.csv", ds.inputs, delimiter=",", fmt="%.17g")
    np.savetxt(out / "labels.csv", ds.labels, delimiter=",", fmt="%.17g")
    (out / "meta.json").write_text(json.dumps(ds.meta, indent=2))
    if indices is not None:
        (out / "split.json").write_text(json.dumps(indices.as_dict()))


def load_dataset(indir) -> tuple[RegressionDataset, SplitIndices | None]:
    path = Path(indir)
    inputs_path = path / "inputs.csv"
    if not inputs_path.exists():
        raise DataNotFound(f"no dataset at {path} (missing inputs.csv)")
    inputs = np.loadtxt(inputs_path, delimiter=",", ndmin=2)
    labels = np.loadtxt(path / "labels.csv", delimiter=",").reshape(-1)
    meta = {}
    meta_path = path / "meta.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
    indices = None
    split_path = path / "split.json"
    if split_path.exists():
        raw = json.loads(split_path.read_text())
        indices = SplitIndices(
            labeled=np.asarray(raw["labeled"], dtype=int),
            unlabeled=np.asarray(raw["unlabeled"], dtype=int),
            val=np.asarray(raw["val"], dtype=int),
            test=np.asarray(raw["test"], dtype=int),
        )
    return RegressionDataset(inputs, labels, meta), indices


__all__ = [
    "DEFAULT_FORCING",
    "DEFAULT_PROBE",
    "GPConfig",
    "RegressionDataset",
    "SplitIndices",
    "gp_cholesky",
    "load_dataset",
    "make_dataset",
    "sample_gp",
    "save_dataset",
    "solution_at",
    "solve_spde",
    "split",
]
