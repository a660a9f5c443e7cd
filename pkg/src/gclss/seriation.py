"""Ordinal ranking recovery from similarity matrices.

Plain spectral seriation ranks items by their Fiedler-vector entries.  The
anchored variant fixes the positions of a labeled prefix through a real
anchor vector r and solves for the unlabeled block in closed form from the
eigendecomposition of the unlabeled diagonal block of the mixed Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularUnlabeledBlock, ZeroVarianceLabels
from .linalg import check_symmetric, eig_sym, fiedler, laplacian
from .rankdiff import rk

SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class MixedBatchLayout:
    """Index contract for mixed batches: rows 0..labeled-1 are labeled,
    labeled..labeled+unlabeled-1 are unlabeled."""

    labeled: int
    unlabeled: int

    def __post_init__(self):
        if self.labeled < 1 or self.unlabeled < 1:
            raise ValueError(
                f"layout needs at least one labeled and one unlabeled sample, "
                f"got {self.labeled}/{self.unlabeled}"
            )

    @property
    def total(self) -> int:
        return self.labeled + self.unlabeled

    def validate(self, matrix: np.ndarray) -> None:
        if matrix.shape[0] != self.total:
            raise ValueError(
                f"matrix dimension {matrix.shape[0]} does not match layout total {self.total}"
            )


def seriation_objective(similarity, ranks) -> float:
    """sum_ij S[i,j] * (R_i - R_j)^2 for a candidate rank assignment."""
    s = np.asarray(similarity, dtype=float)
    r = np.asarray(ranks, dtype=float)
    if s.shape[0] != r.shape[0] or s.shape[0] != s.shape[1]:
        raise ValueError(f"dimension mismatch: S {s.shape}, R {r.shape}")
    d = r[:, None] - r[None, :]
    return float(np.sum(s * d * d))


def seriate(similarity) -> np.ndarray:
    """Ranks of the Fiedler-vector entries of the similarity Laplacian.

    Deterministic, but the orientation (which end is rank 0) is arbitrary:
    downstream uses depend only on pairwise rank distances, which are
    invariant under reversal.
    """
    vec = fiedler(laplacian(similarity))
    return rk(vec)


def anchor_vector(s_mixed, layout: MixedBatchLayout, labels, mode: str = "fiedler") -> np.ndarray:
    """Real-valued anchor positions for the labeled block of a mixed batch.

    mode="fiedler": Fiedler vector of the labeled block's own Laplacian,
    sign-flipped so its correlation with the labels is non-negative.
    mode="label_ranks": centered, unit-normalized ranks of the labels
    (an alternative when ground truth should pin the anchor exactly).
    """
    s_mixed = check_symmetric(s_mixed)
    layout.validate(s_mixed)
    labels = np.asarray(labels, dtype=float).reshape(-1)
    m = layout.labeled
    if labels.shape[0] != m:
        raise ValueError(f"expected {m} labels, got {labels.shape[0]}")
    if float(np.max(labels) - np.min(labels)) == 0.0:
        raise ZeroVarianceLabels("anchor labels are all equal")
    if mode == "label_ranks":
        centered = rk(labels).astype(float)
        centered -= centered.mean()
        return centered / np.linalg.norm(centered)
    if mode != "fiedler":
        raise ValueError(f"unknown anchor mode {mode!r}")
    block = s_mixed[:m, :m]
    vec = fiedler(laplacian(block))
    centered_labels = labels - labels.mean()
    if float(vec @ centered_labels) < 0.0:
        vec = -vec
    return vec


def seriate_mixed(
    s_mixed,
    layout: MixedBatchLayout,
    anchor,
    ridge: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Ranking of the unlabeled block given anchor positions for the labeled one.

    Solves the anchored quadratic relaxation in closed form: with L the mixed
    Laplacian partitioned into the labeled block, the cross block C (labeled
    rows x unlabeled columns), and the unlabeled diagonal block U,

        r' = sum_i (1 / lam_i) a_i a_i^T  (-C^T r)

    over the eigenpairs (lam_i, a_i) of U, equivalently the solution of
    U r' = -C^T r.  Returns the ranks of r' and r' itself.  ``ridge`` is an
    optional diagonal repair added to U when its smallest eigenvalue is at
    the singularity threshold (callers log it; the bias is negligible at the
    recommended 1e-8 * trace(U)/n scale).
    """
    s_mixed = check_symmetric(s_mixed)
    layout.validate(s_mixed)
    anchor = np.asarray(anchor, dtype=float).reshape(-1)
    m = layout.labeled
    if anchor.shape[0] != m:
        raise ValueError(f"anchor length {anchor.shape[0]} does not match labeled count {m}")
    lap = laplacian(s_mixed)
    cross = lap[:m, m:]
    unlabeled_block = lap[m:, m:]
    if ridge:
        unlabeled_block = unlabeled_block + ridge * np.eye(layout.unlabeled)
    dec = eig_sym(unlabeled_block)
    if dec.eigenvalues[0] <= SINGULAR_TOL:
        raise SingularUnlabeledBlock(
            f"unlabeled block smallest eigenvalue {dec.eigenvalues[0]:.3e} <= {SINGULAR_TOL:.0e}"
        )
    rhs = -(cross.T @ anchor)
    coeffs = dec.eigenvectors.T @ rhs
    r_prime = dec.eigenvectors @ (coeffs / dec.eigenvalues)
    return rk(r_prime), r_prime


def default_ridge(s_mixed, layout: MixedBatchLayout) -> float:
    """Diagonal repair scale for a singular unlabeled block:
    1e-8 * trace(U) / n."""
    lap = laplacian(check_symmetric(s_mixed))
    u = lap[layout.labeled:, layout.labeled:]
    return 1e-8 * float(np.trace(u)) / layout.unlabeled


__all__ = [
    "MixedBatchLayout",
    "anchor_vector",
    "default_ridge",
    "seriate",
    "seriate_mixed",
    "seriation_objective",
]
