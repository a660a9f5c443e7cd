"""Variance-based feature selection over repeated similarity observations.

Given several observations of the same similarity matrix, entries that vary
little across observations point at features that are stable under the
repeated measurements.  ``dp_select`` picks a subset with small total
pairwise variance using a prefix dynamic program over a single remembered
list per state: a heuristic, so an exhaustive oracle (``brute_select``) is
provided for verification.  ``toy_experiment`` replays the selection
pipeline on synthetic features with a known per-sample noise ladder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import chain, combinations

import numpy as np

from .errors import (
    InsufficientObservations,
    InvalidBudget,
    TooLarge,
    ZeroNormFeature,
)

BRUTE_FORCE_LIMIT = 5_000_000


def variance_matrix(observations) -> np.ndarray:
    """Entrywise population variance across a list of equal-shape matrices."""
    if len(observations) < 2:
        raise InsufficientObservations(
            f"need at least 2 observations, got {len(observations)}"
        )
    stack = np.stack([np.asarray(o, dtype=float) for o in observations])
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ValueError(f"observations must be square matrices, got {stack.shape[1:]}")
    return stack.var(axis=0)


def normalize_rows(features) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    norms = np.linalg.norm(features, axis=1)
    if np.any(norms < 1e-300):
        raise ZeroNormFeature("feature row with zero norm cannot be normalized")
    return features / norms[:, None]


def cross_similarities(z1, z2) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The four cosine-similarity matrices between two groups of features
    describing the same samples: (1,1), (1,2), (2,1), (2,2)."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if z1.shape != z2.shape:
        raise ValueError(f"feature groups differ in shape: {z1.shape} vs {z2.shape}")
    a = normalize_rows(z1)
    b = normalize_rows(z2)
    return a @ a.T, a @ b.T, b @ a.T, b @ b.T


@dataclass(frozen=True)
class SelectionResult:
    indices: tuple[int, ...]
    cost: float


def subset_cost(variance, indices) -> float:
    """Total pairwise cost of a subset, read from the lower triangle
    (V[i, j] with i > j); identical to either triangle for symmetric V."""
    v = np.asarray(variance, dtype=float)
    idx = sorted(int(i) for i in indices)
    total = 0.0
    for a in range(1, len(idx)):
        for b in range(a):
            total += v[idx[a], idx[b]]
    return total


def _best_pair_per_prefix(v: np.ndarray, n: int) -> tuple[np.ndarray, list[list[int]]]:
    """Exact cheapest pair among the first i items, for every prefix size i.

    Single items cost nothing, so pair states have to be seeded exhaustively:
    a remembered one-item state carries no cost signal to extend from.
    """
    cost = np.full(n + 1, np.inf)
    pairs: list[list[int]] = [[] for _ in range(n + 1)]
    best = math.inf
    best_pair: list[int] = []
    for i in range(2, n + 1):
        item = i - 1
        for j in range(item):  # lexicographic scan, strict < keeps first
            c = v[item, j]
            if c < best:
                best = c
                best_pair = [j, item]
        cost[i] = best
        pairs[i] = best_pair
    return cost, pairs


def dp_select(variance, budget: int) -> SelectionResult:
    """Heuristic prefix dynamic program minimizing total pairwise variance.

    Pair selections are seeded exactly per prefix; above that, state (i, b)
    remembers one best-known selection of b items among the first i, built
    by either skipping item i-1 or extending some earlier state (j, b-1)
    and paying the cost between item i-1 and that state's remembered list.
    Remembering a single list per state is what makes this a heuristic
    rather than an exact solver; see ``brute_select``.  Choosing one item or
    none costs nothing.  Ties resolve to ascending indices.
    """
    v = np.asarray(variance, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError(f"variance matrix must be square, got {v.shape}")
    n = v.shape[0]
    if budget < 1 or budget > n:
        raise InvalidBudget(f"budget {budget} outside [1, {n}]")
    if budget == 1:
        return SelectionResult((0,), 0.0)
    pair_cost, pair_list = _best_pair_per_prefix(v, n)
    if budget == 2:
        return SelectionResult(tuple(pair_list[n]), float(pair_cost[n]))
    cost = np.full((n + 1, budget + 1), np.inf)
    cost[2:, 2] = pair_cost[2:]
    chosen: list[list[list[int]]] = [
        [[] for _ in range(budget + 1)] for _ in range(n + 1)
    ]
    for i in range(2, n + 1):
        chosen[i][2] = pair_list[i]
    for i in range(3, n + 1):
        item = i - 1
        for b in range(3, min(i, budget) + 1):
            best = cost[i - 1, b]
            best_list = chosen[i - 1][b]
            for j in range(b - 1, i):
                base = cost[j, b - 1]
                if not math.isfinite(base):
                    continue
                prefix = chosen[j][b - 1]
                candidate = base + v[item, prefix].sum()
                if candidate < best:
                    best = candidate
                    best_list = sorted(prefix + [item])
            cost[i, b] = best
            chosen[i][b] = best_list
    return SelectionResult(tuple(chosen[n][budget]), float(cost[n, budget]))


def brute_select(variance, budget: int) -> SelectionResult:
    """Exact minimizer of the pairwise-variance cost by enumeration.

    Ties resolve to the lexicographically smallest index tuple.  Refuses
    instances with more than BRUTE_FORCE_LIMIT subsets.
    """
    v = np.asarray(variance, dtype=float)
    n = v.shape[0]
    if budget < 1 or budget > n:
        raise InvalidBudget(f"budget {budget} outside [1, {n}]")
    count = math.comb(n, budget)
    if count > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"C({n},{budget}) = {count} exceeds limit {BRUTE_FORCE_LIMIT}")
    idx = np.fromiter(
        chain.from_iterable(combinations(range(n), budget)),
        dtype=np.int16,
        count=count * budget,
    ).reshape(count, budget)
    costs = np.zeros(count)
    for a in range(1, budget):
        for b in range(a):
            # combinations are ascending, so column a > column b elementwise
            costs += v[idx[:, a], idx[:, b]]
    k = int(np.argmin(costs))  # first minimum = lexicographically smallest
    return SelectionResult(tuple(int(i) for i in idx[k]), float(costs[k]))


@dataclass(frozen=True)
class ToyTrial:
    """One run of the synthetic selection benchmark."""

    accuracy: float
    selected: tuple[int, ...]
    quietest: tuple[int, ...]
    dp_cost: float
    sigmas: np.ndarray


def run_toy_trial(
    seed: int,
    n: int = 25,
    dim: int = 256,
    groups: int = 10,
    budget: int = 10,
    sigma_base: float = 0.35,
    sigma_step: float = 0.005,
) -> ToyTrial:
    """Simulated feature batch with a per-sample Gaussian noise ladder.

    n base vectors are replicated into ``groups`` observations; sample i gets
    noise with sigma = sigma_base + sigma_step * pi(i) for a random
    permutation pi.  All group-pair similarity matrices feed the variance
    matrix, and the DP selection is scored against the ``budget`` samples
    with the smallest sigma.
    """
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n, dim))
    ladder = rng.permutation(n)
    sigmas = sigma_base + sigma_step * ladder
    observations = [
        normalize_rows(base + sigmas[:, None] * rng.standard_normal((n, dim)))
        for _ in range(groups)
    ]
    sims = [
        observations[a] @ observations[b].T
        for a in range(groups)
        for b in range(groups)
    ]
    variance = variance_matrix(sims)
    selection = dp_select(variance, budget)
    quietest = tuple(int(i) for i in np.flatnonzero(ladder < budget))
    hits = len(set(selection.indices) & set(quietest))
    return ToyTrial(
        accuracy=hits / budget,
        selected=selection.indices,
        quietest=quietest,
        dp_cost=selection.cost,
        sigmas=sigmas,
    )


def toy_experiment(
    seed: int,
    n: int = 25,
    dim: int = 256,
    groups: int = 10,
    budget: int = 10,
    sigma_base: float = 0.35,
    sigma_step: float = 0.005,
) -> float:
    """Selection accuracy of one toy trial (fraction of quietest samples found)."""
    return run_toy_trial(seed, n, dim, groups, budget, sigma_base, sigma_step).accuracy


__all__ = [
    "BRUTE_FORCE_LIMIT",
    "SelectionResult",
    "ToyTrial",
    "brute_select",
    "cross_similarities",
    "dp_select",
    "normalize_rows",
    "run_toy_trial",
    "subset_cost",
    "toy_experiment",
    "variance_matrix",
]
