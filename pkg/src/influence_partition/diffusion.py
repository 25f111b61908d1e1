"""Spread evaluation under the independent-cascade and linear-threshold models.

Monte-Carlo estimators share one live-edge (IC) or in-edge-selection (LT)
realization per run across all seed nodes: the estimand is the sum of
single-seed spreads, so this is unbiased and keeps common random numbers
across communities, methods, and nested subsets evaluated with one seed.
Exhaustive oracles back the estimators on small instances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .graph import InfluenceGraph
from .rng import TAG_IC_EVAL, TAG_LT_EVAL, as_generator, derive

DEFAULT_MC_RUNS = 500


class SizeCapError(ValueError):
    """Exact enumeration refused: instance above the configured cap."""


@dataclass(frozen=True)
class SpreadEstimate:
    """Expected count of non-seed activations; std_error is 0 for exact values."""

    mean: float
    samples: int
    std_error: float

    def __post_init__(self) -> None:
        if self.mean < -1e-9 or self.std_error < 0.0:
            raise ValueError("invalid spread estimate")


def _estimate_from_runs(totals: np.ndarray) -> SpreadEstimate:
    r = len(totals)
    mean = float(totals.mean()) if r else 0.0
    se = float(totals.std(ddof=1) / math.sqrt(r)) if r > 1 else 0.0
    return SpreadEstimate(mean=mean, samples=r, std_error=se)


# ---------------------------------------------------------------------------
# Single-cascade simulators (per-edge / per-node randomness drawn up front so
# that runs with nested seed sets are monotonically coupled).
# ---------------------------------------------------------------------------

def simulate_ic(g: InfluenceGraph, seeds, rng) -> frozenset[int]:
    """One independent-cascade realization; returns all activated nodes."""
    seeds = sorted(set(int(v) for v in seeds))
    if seeds and (seeds[0] < 0 or seeds[-1] >= g.node_count):
        raise ValueError("seed out of range")
    gen = as_generator(rng)
    u = gen.random(g.edge_count)
    live = u < np.asarray(g.prob)
    active = set(seeds)
    frontier = list(seeds)
    while frontier:
        nxt = []
        for v in frontier:
            lo, hi = g.out_ptr[v], g.out_ptr[v + 1]
            for e in range(lo, hi):
                w = int(g.out_dst[e])
                if w not in active and live[g.out_eid[e]]:
                    active.add(w)
                    nxt.append(w)
        frontier = sorted(nxt)
    return frozenset(active)


def simulate_lt(g: InfluenceGraph, seeds, rng) -> frozenset[int]:
    """One linear-threshold realization with uniform per-node thresholds."""
    if not g.lt_valid:
        raise ValueError("graph violates the linear-threshold weight constraint")
    seeds = sorted(set(int(v) for v in seeds))
    if seeds and (seeds[0] < 0 or seeds[-1] >= g.node_count):
        raise ValueError("seed out of range")
    gen = as_generator(rng)
    thresholds = gen.random(g.node_count)
    active = np.zeros(g.node_count, dtype=bool)
    active[seeds] = True
    weight_in = np.zeros(g.node_count)
    frontier = list(seeds)
    while frontier:
        nxt = []
        for v in frontier:
            lo, hi = g.out_ptr[v], g.out_ptr[v + 1]
            for e in range(lo, hi):
                w = int(g.out_dst[e])
                if active[w]:
                    continue
                weight_in[w] += g.out_prob[e]
                if weight_in[w] >= thresholds[w]:
                    active[w] = True
                    nxt.append(w)
        frontier = sorted(nxt)
    return frozenset(np.flatnonzero(active).tolist())


# ---------------------------------------------------------------------------
# Monte-Carlo community evaluators.
# ---------------------------------------------------------------------------

class IcMcSpread:
    """Live-edge IC spread estimator over subsets of one graph's nodes.

    Uniform variates are drawn per (run, root edge), so two evaluators with
    the same seed share randomness on shared edges regardless of which
    subgraph or subset they score.
    """

    def __init__(self, g: InfluenceGraph, r: int = DEFAULT_MC_RUNS, seed: int = 0):
        if r < 1:
            raise ValueError("run count must be >= 1")
        self.g = g
        self.r = int(r)
        self.seed = int(seed)
        u = derive(seed, TAG_IC_EVAL).random((self.r, g.root_edge_count))
        self.live = np.ascontiguousarray(u[:, g.edge_origin] < np.asarray(g.prob)[None, :]) if g.edge_count else np.zeros((self.r, 0), dtype=bool)
        self.order = K.dfs_postorder(g.out_ptr, g.out_dst, g.node_count)
        self._mean_cache: dict[frozenset[int], float] = {}

    def run_totals(self, nodes) -> np.ndarray:
        members = np.array(sorted(set(int(v) for v in nodes)), dtype=np.int64)
        if len(members) == 0:
            return np.zeros(self.r)
        mask = np.zeros(self.g.node_count, dtype=bool)
        mask[members] = True
        return K.ic_run_totals(self.live, self.g.out_ptr, self.g.out_dst, self.g.out_eid, members, mask, self.order, self.g.node_count)

    def sigma(self, nodes) -> float:
        key = frozenset(int(v) for v in nodes)
        if key not in self._mean_cache:
            self._mean_cache[key] = float(self.run_totals(key).mean()) if key else 0.0
        return self._mean_cache[key]

    def estimate(self, nodes) -> SpreadEstimate:
        return _estimate_from_runs(self.run_totals(nodes))

    def value(self, pairs) -> float:
        return _pairs_value(self, pairs)


class LtMcSpread:
    """Selection-based LT spread estimator over subsets of one graph's nodes.

    Each run fixes, per node, the in-neighbor it would select in the full
    graph; a subset keeps that selection only when the neighbor is a member.
    This couples nested subsets exactly, which the relaxation gradient's
    telescoping prefix evaluation relies on.
    """

    def __init__(self, g: InfluenceGraph, r: int = DEFAULT_MC_RUNS, seed: int = 0):
        if r < 1:
            raise ValueError("run count must be >= 1")
        if not g.lt_valid:
            raise ValueError("graph violates the linear-threshold weight constraint")
        self.g = g
        self.r = int(r)
        self.seed = int(seed)
        xi_root = derive(seed, TAG_LT_EVAL).random((self.r, g.root_node_count))
        xi = xi_root[:, g.node_origin] if g.node_count else xi_root[:, :0]
        self.parent = _selection_matrix(g, xi)
        self._mean_cache: dict[frozenset[int], float] = {}

    def run_totals(self, nodes) -> np.ndarray:
        members = np.array(sorted(set(int(v) for v in nodes)), dtype=np.int64)
        if len(members) == 0:
            return np.zeros(self.r)
        mask = np.zeros(self.g.node_count, dtype=bool)
        mask[members] = True
        return K.lt_run_totals(self.parent, members, mask)

    def sigma(self, nodes) -> float:
        key = frozenset(int(v) for v in nodes)
        if key not in self._mean_cache:
            self._mean_cache[key] = float(self.run_totals(key).mean()) if key else 0.0
        return self._mean_cache[key]

    def estimate(self, nodes) -> SpreadEstimate:
        return _estimate_from_runs(self.run_totals(nodes))

    def value(self, pairs) -> float:
        return _pairs_value(self, pairs)


def _selection_matrix(g: InfluenceGraph, xi: np.ndarray) -> np.ndarray:
    """Per-(run, node) selected in-neighbor: node v picks in-edge e when its
    variate lands in e's slice of v's stacked in-probabilities, else -1."""
    r = xi.shape[0]
    n = g.node_count
    if n == 0 or g.edge_count == 0:
        return np.full((r, n), -1, dtype=np.int64)
    cums = np.cumsum(g.in_prob)
    block_prev = np.concatenate(([0.0], cums))[g.in_ptr[:-1]]
    within = cums - np.repeat(block_prev, np.diff(g.in_ptr))
    owner = np.repeat(np.arange(n), np.diff(g.in_ptr))
    keys = owner + np.minimum(within, 1.0)
    flat = (xi + np.arange(n)[None, :]).ravel()
    idx = np.searchsorted(keys, flat, side="right")
    in_range = idx < len(keys)
    idx_c = np.minimum(idx, len(keys) - 1)
    valid = in_range & (owner[idx_c] == np.tile(np.arange(n), r))
    parent = np.where(valid, g.in_src[idx_c], -1)
    return np.ascontiguousarray(parent.reshape(r, n).astype(np.int64))


def _pairs_value(model, pairs) -> float:
    groups: dict[int, set[int]] = {}
    for i, j in pairs:
        groups.setdefault(int(i), set()).add(int(j))
    return float(sum(model.sigma(frozenset(nodes)) for _, nodes in sorted(groups.items())))


def sigma_community_ic(g_sub: InfluenceGraph, r: int = DEFAULT_MC_RUNS, rng: int = 0) -> SpreadEstimate:
    """Estimate the community spread: every member seeds separately and the
    per-seed spreads (activated minus seed) are summed."""
    model = IcMcSpread(g_sub, r=r, seed=int(rng))
    return model.estimate(range(g_sub.node_count))


def sigma_community_lt(g_sub: InfluenceGraph, r: int = DEFAULT_MC_RUNS, rng: int = 0) -> SpreadEstimate:
    """LT counterpart of sigma_community_ic."""
    model = LtMcSpread(g_sub, r=r, seed=int(rng))
    return model.estimate(range(g_sub.node_count))


class ExactIcSpread:
    """Exact IC spread over subsets of one graph's nodes (small instances)."""

    def __init__(self, g: InfluenceGraph, max_edges: int = 20):
        self.g = g
        self.max_edges = max_edges
        self._cache: dict[frozenset[int], float] = {}

    def sigma(self, nodes) -> float:
        from .graph import induced_subgraph

        key = frozenset(int(v) for v in nodes)
        if key not in self._cache:
            self._cache[key] = exact_sigma_ic(induced_subgraph(self.g, key), self.max_edges) if key else 0.0
        return self._cache[key]

    def value(self, pairs) -> float:
        return _pairs_value(self, pairs)


class ExactLtSpread:
    """Exact LT spread over subsets of one graph's nodes (small instances)."""

    def __init__(self, g: InfluenceGraph, max_configs: int = 1_000_000):
        self.g = g
        self.max_configs = max_configs
        self._cache: dict[frozenset[int], float] = {}

    def sigma(self, nodes) -> float:
        from .graph import induced_subgraph

        key = frozenset(int(v) for v in nodes)
        if key not in self._cache:
            self._cache[key] = exact_sigma_lt(induced_subgraph(self.g, key), self.max_configs) if key else 0.0
        return self._cache[key]

    def value(self, pairs) -> float:
        return _pairs_value(self, pairs)


# ---------------------------------------------------------------------------
# Exact oracles (exponential; guarded by size caps).
# ---------------------------------------------------------------------------

def _reach_size(adj: list[int], start: int) -> int:
    reach = 1 << start
    frontier = reach
    while frontier:
        nxt = 0
        f = frontier
        while f:
            v = (f & -f).bit_length() - 1
            f &= f - 1
            nxt |= adj[v]
        frontier = nxt & ~reach
        reach |= frontier
    return bin(reach).count("1")


def exact_sigma_ic(g_sub: InfluenceGraph, max_edges: int = 20) -> float:
    """Exact IC community spread by enumerating all live-edge subgraphs."""
    e = g_sub.edge_count
    if e > max_edges:
        raise SizeCapError(f"{e} edges exceeds the exact-enumeration cap {max_edges}")
    n = g_sub.node_count
    src = g_sub.src.tolist()
    dst = g_sub.dst.tolist()
    prob = g_sub.prob.tolist()
    total = 0.0
    for state in range(1 << e):
        w = 1.0
        adj = [0] * n
        for idx in range(e):
            if state >> idx & 1:
                w *= prob[idx]
                adj[src[idx]] |= 1 << dst[idx]
            else:
                w *= 1.0 - prob[idx]
        if w == 0.0:
            continue
        spread = sum(_reach_size(adj, i) - 1 for i in range(n))
        total += w * spread
    return total


def exact_sigma_lt(g_sub: InfluenceGraph, max_configs: int = 1_000_000) -> float:
    """Exact LT community spread by enumerating per-node in-edge selections.

    Each node independently selects one in-edge with its weight as the
    probability (or none, with the leftover mass); a seed's spread is the
    number of nodes whose selection chains lead back to it.
    """
    if not g_sub.lt_valid:
        raise ValueError("graph violates the linear-threshold weight constraint")
    n = g_sub.node_count
    choices: list[list[tuple[int, float]]] = []
    combos = 1
    for v in range(n):
        srcs, probs = g_sub.in_neighbors(v)
        opts = [(int(u), float(p)) for u, p in zip(srcs, probs)]
        none_p = max(0.0, 1.0 - sum(p for _, p in opts))
        opts.append((-1, none_p))
        choices.append(opts)
        combos *= len(opts)
        if combos > max_configs:
            raise SizeCapError(f"selection space exceeds the cap {max_configs}")
    sel = [0] * n
    total = 0.0
    while True:
        w = 1.0
        parent = [0] * n
        for v in range(n):
            u, p = choices[v][sel[v]]
            w *= p
            parent[v] = u
        if w > 0.0:
            anc = [-1] * n  # distinct-ancestor counts, memoized
            spread = 0
            for v in range(n):
                spread += _ancestor_count(parent, v, anc)
            total += w * spread
        pos = 0
        while pos < n:
            sel[pos] += 1
            if sel[pos] < len(choices[pos]):
                break
            sel[pos] = 0
            pos += 1
        if pos == n:
            break
    return total


def _ancestor_count(parent: list[int], v: int, anc: list[int]) -> int:
    """Distinct proper ancestors of v along the selection chain (memoized)."""
    if anc[v] >= 0:
        return anc[v]
    chain: list[int] = []
    pos: dict[int, int] = {}
    cur = v
    while True:
        pos[cur] = len(chain)
        chain.append(cur)
        nxt = parent[cur]
        if nxt < 0:
            anc[cur] = 0
            top = len(chain) - 2
            break
        if anc[nxt] >= 0:
            anc[cur] = 1 + anc[nxt]
            top = len(chain) - 2
            break
        if nxt in pos:
            p = pos[nxt]
            cyclen = len(chain) - p
            for t in range(p, len(chain)):
                anc[chain[t]] = cyclen - 1
            top = p - 1
            break
        cur = nxt
    for t in range(top, -1, -1):
        anc[chain[t]] = 1 + anc[chain[t + 1]]
    return anc[v]
