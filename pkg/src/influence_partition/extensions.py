"""Continuous relaxations of the assignment objectives.

The piecewise-linear extension (sorted-prefix form) serves the supermodular
upper bound; the sampled product-form extension serves the submodular lower
bound. Set functions are evaluated per community, so prefix and sample
differences touch only the community that changed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mia import MiaSpread
from .objectives import FractionalAssignment, Pair
from .rng import TAG_LOWER_GRAD, TAG_VALUE_EST, derive

GRID_TIE_TOL = 0.0  # exact float ordering; ties broken lexicographically


@dataclass(frozen=True)
class GradientMatrix:
    """Per-cell ascent weights for one relaxation step."""

    w: np.ndarray
    provenance: str  # "lovasz" | "multilinear"
    samples_used: int

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.w)):
            raise ValueError("gradient entries must be finite")


@dataclass(frozen=True)
class SortedOrder:
    """Cells of a fractional point, non-increasing by value; ties go in
    (community, node) order so the subgradient choice is deterministic."""

    cells: tuple[Pair, ...]
    values: tuple[float, ...]


def sorted_cells(x: FractionalAssignment) -> SortedOrder:
    m, n = x.m, x.n
    flat = x.x.ravel()
    order = np.lexsort((np.tile(np.arange(n), m), np.repeat(np.arange(m), n), -flat))
    cells = tuple((int(k // n), int(k % n)) for k in order)
    return SortedOrder(cells=cells, values=tuple(float(flat[k]) for k in order))


class _CommunityTracker:
    """Running per-community sets and sigma values for prefix evaluation."""

    def __init__(self, fbar):
        self.fbar = fbar
        self.use_sigma = hasattr(fbar, "sigma")
        self.sets: dict[int, set[int]] = {}
        self.sigmas: dict[int, float] = {}
        self.total = 0.0
        self.pairs: list[Pair] = []

    def add(self, cell: Pair) -> float:
        """Add one cell to the prefix; returns the objective delta."""
        i, j = cell
        if self.use_sigma:
            nodes = self.sets.setdefault(i, set())
            old = self.sigmas.get(i, 0.0)
            nodes.add(j)
            new = self.fbar.sigma(frozenset(nodes))
            self.sigmas[i] = new
            delta = new - old
        else:
            old = self.fbar(tuple(self.pairs))
            self.pairs.append(cell)
            delta = self.fbar(tuple(self.pairs)) - old
        self.total += delta
        return delta


def lovasz_value(x: FractionalAssignment, fbar) -> float:
    """Sorted-prefix extension value: sum over the sorted cells of
    (value_k - value_{k+1}) times the set function of the k-prefix, which
    equals the expectation of the function on {cells above a uniform level}."""
    order = sorted_cells(x)
    tracker = _CommunityTracker(fbar)
    total = 0.0
    ncells = len(order.cells)
    for k, cell in enumerate(order.cells):
        xk = order.values[k]
        if xk <= 0.0:
            break
        tracker.add(cell)
        x_next = order.values[k + 1] if k + 1 < ncells else 0.0
        total += (xk - max(x_next, 0.0)) * tracker.total
    return total


def lovasz_gradient(x: FractionalAssignment, fbar) -> GradientMatrix:
    """Subgradient of the sorted-prefix extension: each cell gets the set
    function's gain over the previous prefix in the sorted order."""
    order = sorted_cells(x)
    tracker = _CommunityTracker(fbar)
    w = np.zeros((x.m, x.n))
    for cell in order.cells:
        w[cell] = tracker.add(cell)
    return GradientMatrix(w=w, provenance="lovasz", samples_used=0)


# ---------------------------------------------------------------------------
# Sampling from a fractional point with per-node repair: when several
# communities draw the same node, the one with the largest x (ties: lowest
# community id) keeps it. Sequential inverse-CDF sampling realizes exactly
# that rule with one variate per (sample, node).
# ---------------------------------------------------------------------------

def _column_table(col: np.ndarray, exclude: int = -1) -> tuple[np.ndarray, np.ndarray]:
    active = [i for i in range(len(col)) if col[i] > 0.0 and i != exclude]
    active.sort(key=lambda i: (-col[i], i))
    probs = []
    stay = 1.0
    for i in active:
        probs.append(col[i] * stay)
        stay *= 1.0 - col[i]
    return np.array(active, dtype=np.int64), np.cumsum(np.array(probs)) if probs else np.zeros(0)


def sample_winner_matrix(x: FractionalAssignment, samples: int, gen: np.random.Generator,
                         exclude: Pair | None = None) -> np.ndarray:
    """(samples, n) community holding each node per repaired draw, -1 if none."""
    n = x.n
    winner = np.full((samples, n), -1, dtype=np.int64)
    u = gen.random((samples, n))
    for j in range(n):
        col = x.x[:, j]
        if not np.any(col > 0.0):
            continue
        excl = exclude[0] if exclude is not None and exclude[1] == j else -1
        active, bounds = _column_table(col, excl)
        if len(active) == 0:
            continue
        idx = np.searchsorted(bounds, u[:, j], side="right")
        hit = idx < len(active)
        winner[hit, j] = active[np.minimum(idx, len(active) - 1)][hit]
    return winner


def _winner_pairs(row: np.ndarray) -> tuple[Pair, ...]:
    return tuple((int(c), int(j)) for j, c in enumerate(row.tolist()) if c >= 0)


def multilinear_gradient(x: FractionalAssignment, flow, C: int = 100, rng: int = 0) -> GradientMatrix:
    """Sampled partial derivatives of the product-form extension.

    Entry (i, j) averages, over C repaired draws of the other cells, the gain
    of assigning node j to community i (minus the loss of pulling j out of
    the community that drew it, when one did). Each entry uses its own
    derived substream, so results do not depend on evaluation order.
    """
    if C < 1:
        raise ValueError("sample count must be >= 1")
    w = np.zeros((x.m, x.n))
    fast = isinstance(flow, MiaSpread)
    for i in range(x.m):
        for j in range(x.n):
            gen = derive(rng, TAG_LOWER_GRAD, i, j)
            winner = sample_winner_matrix(x, C, gen, exclude=(i, j))
            if fast:
                w[i, j] = flow.sampled_entry_mean(winner, i, j)
            else:
                acc = 0.0
                for c in range(C):
                    row = winner[c]
                    base = _winner_pairs(row)
                    with_j = tuple(p for p in base if p[1] != j) + ((i, j),)
                    acc += flow.value(with_j) - flow.value(base)
                w[i, j] = acc / C
    return GradientMatrix(w=w, provenance="multilinear", samples_used=int(C))


def multilinear_value_estimate(x: FractionalAssignment, flow, C: int = 100, rng: int = 0) -> float:
    """Monte-Carlo value of the product-form extension at x."""
    if C < 1:
        raise ValueError("sample count must be >= 1")
    gen = derive(rng, TAG_VALUE_EST)
    winner = sample_winner_matrix(x, C, gen)
    acc = 0.0
    for c in range(C):
        acc += flow.value(_winner_pairs(winner[c]))
    return acc / C
