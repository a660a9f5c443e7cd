"""Perturbation budgets, first-order eigen-perturbation, empirical stability."""

import math

import numpy as np
import pytest

from gclss.bounds import (
    PerturbationBound,
    check_robustness,
    eigen_perturbation_first_order,
    feature_bound,
    similarity_bound,
)
from gclss.errors import DegenerateSpectrum
from gclss.linalg import laplacian
from gclss.seriation import MixedBatchLayout


def similarity_from_labels(y):
    y = np.asarray(y, dtype=float)
    return np.exp(-np.abs(y[:, None] - y[None, :]))


def separated_instance(rng, m, n, gap=0.4):
    """Mixed similarity matrix (m labeled rows first) whose unlabeled values
    interleave with labeled ones.  Interleaving matters: with every labeled
    value on one side of every unlabeled one, exp(-|a-b|) factorizes and the
    labeled-by-unlabeled cross block becomes rank one, collapsing its minimum
    singular value and the perturbation budget to zero."""
    total = m + n
    y = np.cumsum(gap + rng.uniform(0, 0.6, size=total))
    slots = np.linspace(1, total - 2, n).round().astype(int)
    unlabeled_mask = np.zeros(total, dtype=bool)
    unlabeled_mask[slots] = True
    return similarity_from_labels(
        np.concatenate([y[~unlabeled_mask], rng.permutation(y[unlabeled_mask])])
    )


def near_tie_instance():
    """Corrupted mixed instance whose two smallest anchored scores nearly
    cross (gap ~8e-6) while the noise budget stays healthy (~3.6e-4).

    Well-ordered instances cannot do this: every tie channel (label ties,
    clustered items) shrinks some budget factor proportionally.  Corrupting
    two similarities (a false match between the outer unlabeled items plus
    damped anchor couplings for one of them) breaks the well-ordering
    premise, and rankings there flip under perturbations far beyond the
    budget, which is what makes the stability check non-vacuous.
    """
    y = np.array([0.0, 1.2, 2.4, 3.6, 0.6, 2.2, 3.0])
    s = similarity_from_labels(y)
    boost, damp = 0.49628605210928595, 0.43974358974358974
    s[4, 6] = s[6, 4] = boost
    s[:4, 6] *= damp
    s[6, :4] = s[:4, 6]
    return s


def scalar_reference_bound(s, m, n):
    """Independent re-derivation of the budget with LAPACK eigenpairs and
    plain float arithmetic."""
    lap = np.diag(np.asarray(s).sum(axis=1)) - np.asarray(s)
    cross = lap[:m, m:]
    lam, vecs = np.linalg.eigh(lap[m:, m:])
    sigma = math.sqrt(max(0.0, float(np.linalg.eigvalsh(cross.T @ cross)[0])))
    cross_inf = max(sum(abs(x) for x in row) for row in cross)
    # the coordinate gap depends on eigenvector signs: fix them the same
    # canonical way (largest-magnitude entry positive)
    fixed = vecs.copy()
    for k in range(n):
        col = fixed[:, k]
        if col[int(np.argmax(np.abs(col)))] < 0:
            fixed[:, k] = -col
    gap = math.inf
    for i in range(n):
        for j in range(n):
            if i != j:
                for k in range(n):
                    gap = min(gap, abs(fixed[k, i] - fixed[k, j]))
    first = sigma / 2.0
    second = lam[0] ** 2 * sigma * gap / (8.0 * math.sqrt(2.0) * lam[-1] * n * cross_inf)
    return min(first, second)


class TestSimilarityBound:
    def test_zero_cross_block_gives_zero(self):
        # block-diagonal similarity: labeled and unlabeled never interact
        s = np.eye(6)
        s[:3, :3] = similarity_from_labels([0.0, 1.0, 2.0])
        s[3:, 3:] = similarity_from_labels([0.0, 1.0, 2.0])
        bound = similarity_bound(s, MixedBatchLayout(3, 3))
        assert bound.sigma_min_cross == 0.0
        assert bound.sim_bound == 0.0

    def test_matches_scalar_reference(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            s = separated_instance(rng, 3, 3)
            bound = similarity_bound(s, MixedBatchLayout(3, 3))
            ref = scalar_reference_bound(s, 3, 3)
            assert bound.sim_bound == pytest.approx(ref, rel=1e-8)

    def test_homogeneity_in_scale(self):
        rng = np.random.default_rng(1)
        s = separated_instance(rng, 4, 3)
        layout = MixedBatchLayout(4, 3)
        b1 = similarity_bound(s, layout)
        b2 = similarity_bound(2.5 * s, layout)
        assert b2.sim_bound == pytest.approx(2.5 * b1.sim_bound, rel=1e-9)
        assert b2.sigma_min_cross == pytest.approx(2.5 * b1.sigma_min_cross, rel=1e-9)
        assert b2.min_gap == pytest.approx(b1.min_gap, rel=1e-9)  # unit eigenvectors

    def test_feature_bound_relation(self):
        rng = np.random.default_rng(2)
        for m, n in [(3, 3), (5, 4), (6, 3)]:
            s = separated_instance(rng, m, n)
            layout = MixedBatchLayout(m, n)
            bound = similarity_bound(s, layout)
            assert bound.feat_bound * (m + n - 1) == pytest.approx(bound.sim_bound, abs=1e-15)
            assert feature_bound(s, layout) == bound.feat_bound

    def test_two_samples_divisor_one(self):
        s = similarity_from_labels([0.0, 2.0])
        bound = similarity_bound(s, MixedBatchLayout(1, 1))
        assert bound.feat_bound == bound.sim_bound


class TestEigenPerturbation:
    def test_zero_perturbation(self):
        rng = np.random.default_rng(3)
        lap = laplacian(separated_instance(rng, 3, 3))
        dlam, dvec = eigen_perturbation_first_order(lap, np.zeros_like(lap))
        assert np.array_equal(dlam, np.zeros(6))
        assert np.array_equal(dvec, np.zeros_like(lap))

    def test_identity_shift(self):
        rng = np.random.default_rng(4)
        lap = laplacian(separated_instance(rng, 3, 4))
        eps = 1e-3
        dlam, dvec = eigen_perturbation_first_order(lap, eps * np.eye(7))
        assert np.allclose(dlam, eps, atol=1e-12)
        assert np.max(np.abs(dvec)) <= 1e-12

    def test_degenerate_spectrum_raises(self):
        with pytest.raises(DegenerateSpectrum):
            eigen_perturbation_first_order(np.eye(4), np.eye(4) * 1e-3)

    def test_quadratic_error_against_exact(self):
        # oracle: exact eigendecomposition of the perturbed matrix
        rng = np.random.default_rng(5)
        lap = laplacian(separated_instance(rng, 4, 4))
        base = np.linalg.eigh(lap)
        for _ in range(20):
            raw = rng.standard_normal((8, 8))
            raw = 0.5 * (raw + raw.T)
            delta = 1e-4 * raw / np.linalg.norm(raw, 2)
            dlam, _ = eigen_perturbation_first_order(lap, delta)
            exact = np.linalg.eigvalsh(lap + delta) - base[0]
            norm = np.linalg.norm(delta, 2)
            assert np.max(np.abs(dlam - exact)) <= 10.0 * norm**2

    def test_error_scales_quadratically(self):
        rng = np.random.default_rng(6)
        lap = laplacian(separated_instance(rng, 4, 4))
        base_vals = np.linalg.eigvalsh(lap)
        raw = rng.standard_normal((8, 8))
        raw = 0.5 * (raw + raw.T)
        raw /= np.linalg.norm(raw, 2)
        sizes = np.array([1e-2, 1e-3, 1e-4, 1e-5])
        errors = []
        for size in sizes:
            dlam, _ = eigen_perturbation_first_order(lap, size * raw)
            exact = np.linalg.eigvalsh(lap + size * raw) - base_vals
            errors.append(np.max(np.abs(dlam - exact)))
        slope = np.polyfit(np.log(sizes), np.log(errors), 1)[0]
        assert 1.8 <= slope <= 2.2


class TestRobustness:
    def test_scale_zero_trivially_stable(self):
        rng = np.random.default_rng(7)
        s = separated_instance(rng, 4, 3)
        report = check_robustness(s, MixedBatchLayout(4, 3), trials=10, scale=0.0,
                                  rng=np.random.default_rng(0))
        assert report.passes == 10
        assert report.max_rank_displacement == 0

    def test_within_bound_rankings_never_change(self):
        rng = np.random.default_rng(8)
        for checked in range(25):
            m = int(rng.integers(3, 7))
            n = int(rng.integers(3, min(m, 6) + 1))  # m >= n keeps the budget positive
            s = separated_instance(rng, m, n)
            layout = MixedBatchLayout(m, n)
            report = check_robustness(s, layout, trials=8, scale=1.0,
                                      rng=np.random.default_rng(checked))
            assert report.passes == report.trials, f"m={m} n={n}"

    def test_far_beyond_bound_near_ties_break(self):
        report = check_robustness(near_tie_instance(), MixedBatchLayout(4, 3),
                                  trials=50, scale=50.0,
                                  rng=np.random.default_rng(1))
        assert report.passes < report.trials
        assert report.max_rank_displacement >= 1

    def test_zero_bound_rejected(self):
        s = np.eye(6)
        s[:3, :3] = similarity_from_labels([0.0, 1.0, 2.0])
        s[3:, 3:] = similarity_from_labels([0.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            check_robustness(s, MixedBatchLayout(3, 3), trials=5)
