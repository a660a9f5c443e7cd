"""Dense symmetric linear algebra: Laplacians, eigendecompositions, norms.

All matrices are plain float64 numpy arrays.  Problem sizes throughout the
package are tiny (n <= 128), so the eigensolver is a cyclic Jacobi sweep:
deterministic across runs and platforms that share a libm, dependency-free,
and accurate to ~1e-12 for well-scaled input.  No sparse or iterative
machinery on purpose.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConvergenceFailure,
    DegenerateFiedler,
    DisconnectedGraph,
    SymmetryViolation,
)

# Relative symmetry slack: |A - A.T| <= SYM_TOL * max(1, max|A|).
SYM_TOL = 1e-12

JACOBI_MAX_SWEEPS = 50


def as_square_array(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains NaN or Inf")
    return a


def check_symmetric(a, tol: float = SYM_TOL) -> np.ndarray:
    """Validate symmetry within ``tol * max(1, max|a|)`` and return the array."""
    a = as_square_array(a)
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    skew = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if skew > tol * scale:
        raise SymmetryViolation(
            f"matrix asymmetry {skew:.3e} exceeds tolerance {tol * scale:.3e}"
        )
    return a


def laplacian(similarity) -> np.ndarray:
    """Graph Laplacian ``diag(row sums) - S`` of a symmetric similarity matrix."""
    s = check_symmetric(similarity)
    lap = np.diag(s.sum(axis=1)) - s
    return lap


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues ascending; eigenvectors as orthonormal columns, column k
    paired with eigenvalue k.  Column signs are canonical: the entry of
    largest magnitude in each column is positive."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


def _jacobi_scalar(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray] | None:
    """Jacobi sweep over nested lists; for small n the scalar arithmetic is
    several times faster than vectorized updates (numpy call overhead
    dominates below ~12x12, which is exactly the training hot path)."""
    n = a.shape[0]
    work = [list(map(float, row)) for row in a]
    vecs = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    scale = max(1.0, math.sqrt(sum(x * x for row in work for x in row)))
    target = 1e-14 * scale
    skip = 1e-20 * scale
    for sweep in range(max_sweeps + 1):
        off2 = 0.0
        for i in range(n - 1):
            row = work[i]
            for j in range(i + 1, n):
                off2 += 2.0 * row[j] * row[j]
        if math.sqrt(off2) <= target:
            return np.array([work[i][i] for i in range(n)]), np.array(vecs)
        if sweep == max_sweeps:
            return None
        for p in range(n - 1):
            row_p = work[p]
            for q in range(p + 1, n):
                apq = row_p[q]
                if apq == 0.0:
                    continue
                if abs(apq) <= skip:
                    row_p[q] = 0.0
                    work[q][p] = 0.0
                    continue
                row_q = work[q]
                theta = (row_q[q] - row_p[p]) / (2.0 * apq)
                if abs(theta) > 1e150:  # theta^2 would overflow
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (
                        abs(theta) + math.sqrt(theta * theta + 1.0)
                    )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                row_p[p] -= t * apq
                row_q[q] += t * apq
                row_p[q] = 0.0
                row_q[p] = 0.0
                for r in range(n):
                    if r == p or r == q:
                        continue
                    row_r = work[r]
                    g = row_r[p]
                    h = row_r[q]
                    g_new = g - s * (h + g * tau)
                    h_new = h + s * (g - h * tau)
                    row_r[p] = g_new
                    row_r[q] = h_new
                    row_p[r] = g_new
                    row_q[r] = h_new
                for r in range(n):
                    row_r = vecs[r]
                    g = row_r[p]
                    h = row_r[q]
                    row_r[p] = g - s * (h + g * tau)
                    row_r[q] = h + s * (g - h * tau)
    return None


SCALAR_JACOBI_MAX_N = 12


def eig_sym(a, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Deterministic for identical input: fixed sweep order, stable sorting,
    canonical column signs.  Raises ConvergenceFailure if the off-diagonal
    mass has not vanished after ``max_sweeps`` sweeps (does not happen for
    finite symmetric input in practice; the budget is a safety valve).
    """
    a = check_symmetric(a)
    n = a.shape[0]
    if 1 < n <= SCALAR_JACOBI_MAX_N:
        result = _jacobi_scalar(a, max_sweeps)
        if result is None:
            raise ConvergenceFailure(
                f"Jacobi eigensolver did not converge in {max_sweeps} sweeps (n={n})"
            )
        values, vecs = result
        return _ordered(values, vecs)
    work = a.copy()
    vecs = np.eye(n)
    if n > 1:
        scale = max(1.0, float(np.linalg.norm(work)))
        target = 1e-14 * scale

        def _off_diag() -> float:
            # sum the off-diagonal squares directly: the difference-of-sums
            # form cancels catastrophically once the matrix is nearly diagonal
            squares = work * work
            np.fill_diagonal(squares, 0.0)
            return math.sqrt(float(np.sum(squares)))

        skip = 1e-20 * scale
        for _ in range(max_sweeps):
            if _off_diag() <= target:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = work[p, q]
                    if apq == 0.0:
                        continue
                    if abs(apq) <= skip:
                        # cannot move eigenvalues at working precision
                        work[p, q] = 0.0
                        work[q, p] = 0.0
                        continue
                    theta = (work[q, q] - work[p, p]) / (2.0 * apq)
                    if abs(theta) > 1e150:  # theta^2 would overflow
                        t = 0.5 / theta
                    else:
                        t = math.copysign(1.0, theta) / (
                            abs(theta) + math.sqrt(theta * theta + 1.0)
                        )
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c
                    tau = s / (1.0 + c)
                    # update in the g - s*(h + g*tau) form: cancellation-free
                    # for the small rotations that dominate late sweeps
                    old_p = work[:, p].copy()
                    old_q = work[:, q].copy()
                    col_p = old_p - s * (old_q + old_p * tau)
                    col_q = old_q + s * (old_p - old_q * tau)
                    col_p[p] = old_p[p] - t * apq
                    col_q[q] = old_q[q] + t * apq
                    col_p[q] = 0.0
                    col_q[p] = 0.0
                    work[:, p] = col_p
                    work[p, :] = col_p
                    work[:, q] = col_q
                    work[q, :] = col_q
                    vec_p = vecs[:, p].copy()
                    vec_q = vecs[:, q].copy()
                    vecs[:, p] = vec_p - s * (vec_q + vec_p * tau)
                    vecs[:, q] = vec_q + s * (vec_p - vec_q * tau)
        else:
            if _off_diag() > target:
                raise ConvergenceFailure(
                    f"Jacobi eigensolver did not converge in {max_sweeps} sweeps (n={n})"
                )
    return _ordered(np.diag(work).copy(), vecs)


def _ordered(values: np.ndarray, vecs: np.ndarray) -> EigenDecomposition:
    order = np.argsort(values, kind="stable")
    values = values[order]
    vecs = vecs[:, order]
    # Canonical signs: largest-magnitude entry of each column positive.
    for k in range(values.shape[0]):
        col = vecs[:, k]
        if col[int(np.argmax(np.abs(col)))] < 0.0:
            vecs[:, k] = -col
    return EigenDecomposition(values, vecs)


def default_zero_tol(lap: np.ndarray) -> float:
    """Threshold separating 'zero' Laplacian eigenvalues from the rest;
    scales with matrix magnitude."""
    n = lap.shape[0]
    return 1e-8 * n * max(float(np.max(np.abs(lap))), 1e-30)


# Relative gap under which the smallest non-zero eigenvalue counts as repeated.
DEGENERACY_TOL = 1e-9


def fiedler(lap, zero_tol: float | None = None) -> np.ndarray:
    """Eigenvector of the smallest Laplacian eigenvalue above ``zero_tol``.

    Unit norm; sign fixed so the first entry of magnitude > 1e-12 is
    positive.  Callers that need a semantic orientation must re-flip.
    """
    lap = check_symmetric(lap)
    n = lap.shape[0]
    if zero_tol is None:
        zero_tol = default_zero_tol(lap)
    dec = eig_sym(lap)
    w = dec.eigenvalues
    n_zero = int(np.sum(w <= zero_tol))
    if n_zero >= 2:
        raise DisconnectedGraph(
            f"{n_zero} eigenvalues below {zero_tol:.3e}; similarity graph is disconnected"
        )
    if n_zero >= n:
        raise DegenerateFiedler("no eigenvalue above the zero threshold")
    idx = n_zero  # first eigenvalue above zero_tol
    if idx + 1 < n:
        gap = w[idx + 1] - w[idx]
        if gap <= DEGENERACY_TOL * max(1.0, float(np.max(np.abs(w)))):
            raise DegenerateFiedler(
                f"second-smallest eigenvalue {w[idx]:.6e} repeated within tolerance"
            )
    vec = dec.eigenvectors[:, idx].copy()
    nonzero = np.flatnonzero(np.abs(vec) > 1e-12)
    if nonzero.size and vec[nonzero[0]] < 0.0:
        vec = -vec
    return vec


def min_singular(b) -> float:
    """sqrt of the smallest eigenvalue of B^T B, clamped at zero.

    Note this is zero whenever B has fewer rows than columns.
    """
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise ValueError("matrix contains NaN or Inf")
    if b.size == 0:
        return 0.0
    gram = b.T @ b
    gram = 0.5 * (gram + gram.T)
    smallest = float(eig_sym(gram).eigenvalues[0])
    return math.sqrt(max(0.0, smallest))


def inf_norm(b) -> float:
    """Maximum absolute row sum."""
    b = np.asarray(b, dtype=float)
    if b.size == 0:
        return 0.0
    return float(np.max(np.abs(b).sum(axis=-1)))


def two_norm_bound(b) -> float:
    """Spectral norm computed via the Gram matrix eigenvalues."""
    b = np.asarray(b, dtype=float)
    if b.size == 0:
        return 0.0
    gram = b.T @ b
    gram = 0.5 * (gram + gram.T)
    largest = float(eig_sym(gram).eigenvalues[-1])
    return math.sqrt(max(0.0, largest))


# ---------------------------------------------------------------------------
# Serialization: CSV (plain rows) and JSON {"n": int, "data": [[...]]}.

def write_matrix_csv(a, path) -> None:
    a = np.asarray(a, dtype=float)
    np.savetxt(path, np.atleast_2d(a), delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    a = np.loadtxt(path, delimiter=",", ndmin=2)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{path}: matrix contains NaN or Inf")
    return a


def write_matrix_json(a, path) -> None:
    a = as_square_array(a)
    payload = {"n": int(a.shape[0]), "data": a.tolist()}
    Path(path).write_text(json.dumps(payload))


def _reject_constant(name):
    raise ValueError(f"non-finite value {name!r} in matrix JSON")


def read_matrix_json(path) -> np.ndarray:
    payload = json.loads(Path(path).read_text(), parse_constant=_reject_constant)
    a = np.asarray(payload["data"], dtype=float)
    if a.shape != (payload["n"], payload["n"]):
        raise ValueError(f"{path}: data shape {a.shape} does not match n={payload['n']}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{path}: matrix contains NaN or Inf")
    return a


def read_vector_csv(path) -> np.ndarray:
    v = np.loadtxt(path, delimiter=",").reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{path}: vector contains NaN or Inf")
    return v


__all__ = [
    "EigenDecomposition",
    "check_symmetric",
    "default_zero_tol",
    "eig_sym",
    "fiedler",
    "inf_norm",
    "laplacian",
    "min_singular",
    "read_matrix_csv",
    "read_matrix_json",
    "read_vector_csv",
    "two_norm_bound",
    "write_matrix_csv",
    "write_matrix_json",
]
