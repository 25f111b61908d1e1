"""Arborescence-model spread: the deterministic lower-bound evaluator.

Influence between a node pair is approximated by the single most probable
path between them; per target, the union of such paths (pruned below a
threshold) forms an in-tree, and activation probabilities are computed by a
bottom-up noisy-or recursion on that tree.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import _kernels as K
from .graph import InfluenceGraph

DEFAULT_THETA = 0.1


@dataclass(frozen=True)
class InfluencePath:
    """A simple path and the product of its edge probabilities."""

    nodes: tuple[int, ...]
    pp: float


@dataclass(frozen=True)
class Arborescence:
    """In-tree of best paths into `root`.

    `nodes` lists members root-first, every parent before its children, so a
    reverse sweep is bottom-up. `parent[u]` is the second node of u's best
    path to the root; `pp[u]` that path's probability; `edge_prob[u]` the
    probability of the edge u -> parent[u].
    """

    root: int
    nodes: tuple[int, ...]
    parent: Mapping[int, int]
    pp: Mapping[int, float]
    edge_prob: Mapping[int, float]

    def children(self) -> dict[int, list[int]]:
        ch: dict[int, list[int]] = {u: [] for u in self.nodes}
        for u in self.nodes:
            if u != self.root:
                ch[self.parent[u]].append(u)
        return ch


def _full_mask(g: InfluenceGraph) -> np.ndarray:
    return np.ones(g.node_count, dtype=bool)


def max_influence_path(g_sub: InfluenceGraph, u: int, v: int) -> InfluencePath | None:
    """Most probable u -> v path; ties broken by fewer hops then smaller
    next-node id. None when v is unreachable from u over positive edges."""
    u, v = int(u), int(v)
    if u == v:
        raise ValueError("path endpoints must differ")
    if not (0 <= u < g_sub.node_count and 0 <= v < g_sub.node_count):
        raise ValueError("node id out of range")
    nodes, pp, _hops, par = K.miia_tree(g_sub.in_ptr, g_sub.in_src, g_sub.in_prob, _full_mask(g_sub), v, 0.0)
    lookup = {int(n): t for t, n in enumerate(nodes)}
    if u not in lookup:
        return None
    seq = [u]
    cur = u
    while cur != v:
        cur = int(par[lookup[cur]])
        seq.append(cur)
    return InfluencePath(nodes=tuple(seq), pp=float(pp[lookup[u]]))


def build_miia(g_sub: InfluenceGraph, v: int, theta: float) -> Arborescence:
    """Union of all best paths into v whose probability is at least theta."""
    v = int(v)
    if not 0 <= v < g_sub.node_count:
        raise ValueError("node id out of range")
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    nodes, pp, _hops, par = K.miia_tree(g_sub.in_ptr, g_sub.in_src, g_sub.in_prob, _full_mask(g_sub), v, theta)
    node_list = [int(x) for x in nodes]
    parent = {}
    pp_map = {}
    edge_prob = {}
    for t, u in enumerate(node_list):
        pp_map[u] = float(pp[t])
        if u == v:
            continue
        w = int(par[t])
        parent[u] = w
        dsts, probs = g_sub.out_neighbors(u)
        for d, p in zip(dsts.tolist(), probs.tolist()):
            if d == w:
                edge_prob[u] = float(p)
                break
    return Arborescence(root=v, nodes=tuple(node_list), parent=parent, pp=pp_map, edge_prob=edge_prob)


def activation_probability(arb: Arborescence, seeds) -> float:
    """Probability the root activates given seeds, by bottom-up noisy-or."""
    seed_set = set(int(s) for s in seeds) & set(arb.nodes)
    children = arb.children()
    ap: dict[int, float] = {}
    for u in reversed(arb.nodes):
        if u in seed_set:
            ap[u] = 1.0
            continue
        acc = 1.0
        for c in children[u]:
            acc *= 1.0 - ap[c] * arb.edge_prob[c]
        ap[u] = 1.0 - acc
    return ap[arb.root]


def sigma_m_node(g_sub: InfluenceGraph, i: int, theta: float, miia_cache: Mapping[int, Arborescence]) -> float:
    """Spread of single seed i: activation probabilities summed over targets."""
    i = int(i)
    total = 0.0
    for v in range(g_sub.node_count):
        if v == i:
            continue
        total += activation_probability(miia_cache[v], (i,))
    return total


def sigma_m_community(g_sub: InfluenceGraph, theta: float) -> float:
    """Community spread under the arborescence model (deterministic)."""
    if g_sub.node_count == 0:
        return 0.0
    members = np.arange(g_sub.node_count, dtype=np.int64)
    return float(K.mia_sigma(g_sub.in_ptr, g_sub.in_src, g_sub.in_prob, _full_mask(g_sub), members, float(theta)))


class MiaSpread:
    """Arborescence-model spread over subsets of one graph's nodes.

    Deterministic; also exposes single-node add gains, which equal the three
    path families a new member contributes (into it, out of it, rerouted
    through it).
    """

    def __init__(self, g: InfluenceGraph, theta: float = DEFAULT_THETA):
        if not 0.0 < theta <= 1.0:
            raise ValueError("theta must be in (0, 1]")
        self.g = g
        self.theta = float(theta)
        self._mean_cache: dict[frozenset[int], float] = {}

    def sigma(self, nodes) -> float:
        key = frozenset(int(v) for v in nodes)
        if key not in self._mean_cache:
            if not key:
                self._mean_cache[key] = 0.0
            else:
                members = np.array(sorted(key), dtype=np.int64)
                mask = np.zeros(self.g.node_count, dtype=bool)
                mask[members] = True
                self._mean_cache[key] = float(
                    K.mia_sigma(self.g.in_ptr, self.g.in_src, self.g.in_prob, mask, members, self.theta)
                )
        return self._mean_cache[key]

    def add_marginal(self, nodes: Iterable[int], j: int) -> float:
        """sigma(nodes + j) - sigma(nodes), without evaluating either side."""
        j = int(j)
        mask = np.zeros(self.g.node_count, dtype=bool)
        for v in nodes:
            mask[int(v)] = True
        if mask[j]:
            raise ValueError("node already in the community")
        return float(
            K.single_add_marginal(
                self.g.in_ptr, self.g.in_src, self.g.in_prob,
                self.g.out_ptr, self.g.out_dst, self.g.out_prob,
                mask, j, self.theta,
            )
        )

    def sampled_entry_mean(self, winner: np.ndarray, comm: int, j: int) -> float:
        return float(
            K.multilinear_entry_mean(
                self.g.in_ptr, self.g.in_src, self.g.in_prob,
                self.g.out_ptr, self.g.out_dst, self.g.out_prob,
                winner, int(comm), int(j), self.theta,
            )
        )

    def sampled_add_mean(self, winner: np.ndarray, comm: int, j: int) -> float:
        return float(
            K.mean_add_marginal(
                self.g.in_ptr, self.g.in_src, self.g.in_prob,
                self.g.out_ptr, self.g.out_dst, self.g.out_prob,
                winner, int(comm), int(j), self.theta,
            )
        )

    def value(self, pairs) -> float:
        groups: dict[int, set[int]] = {}
        for i, j in pairs:
            groups.setdefault(int(i), set()).add(int(j))
        return float(sum(self.sigma(frozenset(nodes)) for _, nodes in sorted(groups.items())))
