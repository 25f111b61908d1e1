"""Shared fixtures: canonical tiny graphs, seeded random-graph generators, and
independent brute-force oracles used to cross-check the package's evaluators.

The oracles here deliberately use different algorithms from the package
(recursive enumeration + BFS instead of bitmask closures and chain counts).
"""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from influence_partition.graph import InfluenceGraph, build_graph


@pytest.fixture
def path3() -> InfluenceGraph:
    # a -> b -> c, p = 0.5 each
    return build_graph(3, [(0, 1, 0.5), (1, 2, 0.5)])


@pytest.fixture
def diamond() -> InfluenceGraph:
    # u -> v1, u -> v2, v1 -> w, v2 -> w, p = 0.5 each (u=0, v1=1, v2=2, w=3)
    return build_graph(4, [(0, 1, 0.5), (0, 2, 0.5), (1, 3, 0.5), (2, 3, 0.5)])


@pytest.fixture
def two_edges() -> InfluenceGraph:
    # two disconnected certain edges a->b, c->d
    return build_graph(4, [(0, 1, 1.0), (2, 3, 1.0)])


def random_edge_set(gen: np.random.Generator, n: int, e: int) -> list[tuple[int, int]]:
    edges: set[tuple[int, int]] = set()
    attempts = 0
    while len(edges) < e and attempts < 50 * e:
        a, b = gen.integers(0, n, 2)
        attempts += 1
        if a != b:
            edges.add((int(a), int(b)))
    return sorted(edges)


def random_lt_graph(seed: int, n: int = 7, e_max: int = 12) -> InfluenceGraph:
    """Random directed graph with uniform probabilities rescaled so that every
    node's incoming weight totals at most 1."""
    gen = np.random.default_rng(seed)
    e = int(gen.integers(max(1, n - 2), e_max + 1))
    edges = random_edge_set(gen, n, e)
    probs = gen.uniform(0.05, 0.95, len(edges))
    in_sum: dict[int, float] = {}
    for (_, b), p in zip(edges, probs):
        in_sum[b] = in_sum.get(b, 0.0) + p
    scale = {b: (1.0 / s if s > 1.0 else 1.0) for b, s in in_sum.items()}
    return build_graph(n, [(a, b, float(p * scale[b])) for (a, b), p in zip(edges, probs)])


def naive_exact_ic(g: InfluenceGraph) -> float:
    """Recursive live-edge enumeration with per-seed BFS (independent route)."""
    edges = list(g.edges())

    def bfs(adj: dict[int, list[int]], s: int) -> int:
        seen = {s}
        stack = [s]
        while stack:
            v = stack.pop()
            for w in adj.get(v, ()):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen)

    def rec(idx: int, adj: dict[int, list[int]], w: float) -> float:
        if w == 0.0:
            return 0.0
        if idx == len(edges):
            return w * sum(bfs(adj, s) - 1 for s in range(g.node_count))
        a, b, p = edges[idx]
        total = rec(idx + 1, adj, w * (1.0 - p))
        adj.setdefault(a, []).append(b)
        total += rec(idx + 1, adj, w * p)
        adj[a].pop()
        return total

    return rec(0, {}, 1.0)


def naive_exact_lt(g: InfluenceGraph) -> float:
    """Per-node in-edge selection enumeration with explicit reachability."""
    options: list[list[tuple[int | None, float]]] = []
    for v in range(g.node_count):
        srcs, probs = g.in_neighbors(v)
        opts: list[tuple[int | None, float]] = [(int(u), float(p)) for u, p in zip(srcs, probs)]
        opts.append((None, max(0.0, 1.0 - sum(p for _, p in opts))))
        options.append(opts)
    total = 0.0
    for combo in itertools.product(*options):
        w = 1.0
        adj: dict[int, list[int]] = {}
        for v, (u, p) in enumerate(combo):
            w *= p
            if u is not None:
                adj.setdefault(u, []).append(v)
        if w == 0.0:
            continue
        spread = 0
        for s in range(g.node_count):
            seen = {s}
            stack = [s]
            while stack:
                v = stack.pop()
                for x in adj.get(v, ()):
                    if x not in seen:
                        seen.add(x)
                        stack.append(x)
            spread += len(seen) - 1
        total += w * spread
    return total


class ModularityReport:
    def __init__(self):
        self.checked = 0
        self.violations = 0
        self.witness = None


def submodularity_violations(sigma, n: int, tol: float = 1e-12) -> ModularityReport:
    """Exhaustive diminishing-returns check of a community-spread function
    over all nested subset pairs; counts violations instead of asserting."""
    report = ModularityReport()
    for a_bits in range(1 << n):
        a_set = frozenset(j for j in range(n) if a_bits >> j & 1)
        for add in range(n):
            if a_bits >> add & 1:
                continue
            b_set = a_set | {add}
            for q in range(n):
                if q == add or q in a_set:
                    continue
                gain_a = sigma(a_set | {q}) - sigma(a_set)
                gain_b = sigma(b_set | {q}) - sigma(b_set)
                report.checked += 1
                if gain_a < gain_b - tol:
                    report.violations += 1
                    if report.witness is None:
                        report.witness = (a_set, b_set, q, gain_a, gain_b)
    return report


def all_partitions(n: int, m: int):
    """Every assignment of n nodes to m labeled communities (empties allowed)."""
    return itertools.product(range(m), repeat=n)


def brute_force_best_partition(g: InfluenceGraph, m: int, sigma) -> tuple[float, tuple[int, ...]]:
    """Maximize sum-of-community values of `sigma` over all m^n partitions."""
    best_val, best = -1.0, None
    for assign in all_partitions(g.node_count, m):
        comms: dict[int, set[int]] = {}
        for j, c in enumerate(assign):
            comms.setdefault(c, set()).add(j)
        val = sum(sigma(frozenset(s)) for s in comms.values())
        if val > best_val:
            best_val, best = val, assign
    return best_val, best
