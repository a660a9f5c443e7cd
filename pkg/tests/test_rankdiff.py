"""Ranking operator and blackbox-differentiated ranking loss."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gclss.errors import InvalidStep
from gclss.rankdiff import is_rank_vector, ranking_loss, rk


class TestRk:
    def test_basic(self):
        assert rk([0.3, 0.1, 0.2]).tolist() == [2, 0, 1]

    def test_ties_broken_by_index(self):
        assert rk([5.0, 5.0, 5.0]).tolist() == [0, 1, 2]

    def test_strictly_decreasing(self):
        n = 6
        assert rk(np.arange(n, 0, -1, dtype=float)).tolist() == list(range(n - 1, -1, -1))

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=20))
    @settings(max_examples=100, deadline=None)
    def test_always_a_permutation(self, values):
        assert is_rank_vector(rk(values))

    @given(st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=12, unique=True))
    @settings(max_examples=60, deadline=None)
    def test_invariant_under_increasing_transform(self, values):
        # integer-backed values keep the transforms strictly increasing in floats
        w = np.asarray(values, dtype=float) / 1000.0
        assert np.array_equal(rk(w), rk(np.exp(w / 50.0)))
        assert np.array_equal(rk(w), rk(3.0 * w + 7.0))


def brute_rank_loss(scores, target):
    ranks = rk(scores).astype(float)
    return float(np.mean((ranks - np.asarray(target)) ** 2))


class TestRankingLoss:
    def test_matching_ranks_zero_loss_zero_grad(self):
        res = ranking_loss([1.0, 2.0, 3.0], [0, 1, 2], step=2.0)
        assert res.loss == 0.0
        assert np.array_equal(res.grad, np.zeros(3))

    def test_invalid_step(self):
        with pytest.raises(InvalidStep):
            ranking_loss([1.0, 2.0], [0, 1], step=0.0)

    def test_two_element_inversion(self):
        # enumeration of the 2-element case: scores (2,1) rank as (1,0);
        # target (0,1) wants the order flipped.  loss = ((1-0)^2+(0-1)^2)/2.
        res = ranking_loss([2.0, 1.0], [0, 1], step=2.0)
        assert res.loss == pytest.approx(1.0)
        # g = (1,-1); perturbed scores (2,1) - 2*(1,-1) = (0,3) rank as (0,1),
        # so the differenced gradient is ((1,0)-(0,1))/2 = (0.5,-0.5): a
        # descent step lowers score 0 and raises score 1, toward the target.
        assert res.grad.tolist() == [0.5, -0.5]
        stepped = np.array([2.0, 1.0]) - 1.2 * res.grad
        assert brute_rank_loss(stepped, [0, 1]) < res.loss

    def test_step_too_small_for_gap_gives_zero_grad(self):
        # gap is 1.0, each score moves by step*|g| = 0.25: no crossing
        res = ranking_loss([2.0, 1.0], [0, 1], step=0.25)
        assert res.loss == pytest.approx(1.0)
        assert np.array_equal(res.grad, np.zeros(2))

    def test_flip_scenario_gradient_value(self):
        # scores (1.0, 1.1) rank (0,1); target (1,0).  g = (-1, 1), the
        # perturbed scores (1+step, 1.1-step) flip for step=2, so
        # grad = ((0,1)-(1,0))/2 = (-0.5, 0.5).
        res = ranking_loss([1.0, 1.1], [1, 0], step=2.0)
        assert res.loss == pytest.approx(1.0)
        assert res.grad.tolist() == [-0.5, 0.5]

    def test_reversal_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            w = rng.standard_normal(6)
            target = rng.permutation(6)
            a = ranking_loss(w, target, step=1.5)
            b = ranking_loss(-w, 5 - target, step=1.5)
            assert a.loss == pytest.approx(b.loss)

    @pytest.mark.parametrize("n", [3, 4])
    def test_descent_property_by_enumeration(self, n):
        """Every (score order, target, step) instance with a non-zero
        gradient: a small step never increases the loss (the ranking cannot
        change below the first crossing), and some step size along the
        negative gradient strictly reduces it.  Large fixed steps may
        overshoot, so only the existence form is asserted."""
        base = np.linspace(0.0, 1.0, n)
        etas = np.linspace(1e-3, 2.0, 200)
        cases = 0
        for w_order in itertools.permutations(range(n)):
            w = base[list(w_order)]
            for target in itertools.permutations(range(n)):
                target = np.array(target)
                for lam in (0.5, 1.0, 2.0, 4.0):
                    res = ranking_loss(w, target, step=lam)
                    if not np.any(res.grad):
                        continue
                    cases += 1
                    assert brute_rank_loss(w - 1e-9 * res.grad, target) <= res.loss
                    swept = min(
                        brute_rank_loss(w - eta * res.grad, target) for eta in etas
                    )
                    assert swept < res.loss - 1e-12, (
                        f"no descent step exists at w={w}, target={target}, lam={lam}"
                    )
        assert cases > 0

    def test_zero_loss_implies_zero_grad_randomized(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            w = rng.standard_normal(7)
            res = ranking_loss(w, rk(w), step=2.0)
            assert res.loss == 0.0
            assert not np.any(res.grad)
