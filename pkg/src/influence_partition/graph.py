"""Directed influence graphs: edge-list ingestion, CSR indexes, induced subgraphs.

Nodes are dense integer ids; external string labels from input files are kept
in a side table. Edge order is the file/construction order and is stable, which
the Monte-Carlo evaluators rely on for common random numbers.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LT_SUM_TOL = 1e-9


class EdgeListError(ValueError):
    """Malformed or inconsistent edge-list input."""


@dataclass(frozen=True)
class InfluenceGraph:
    """Immutable directed graph with per-edge activation probabilities.

    `node_origin` / `edge_origin` map this graph's ids back to the root graph
    it was induced from (identity for graphs built by `load_edge_list`). They
    let evaluators reuse one random stream per root edge across subgraphs.
    """

    node_count: int
    src: np.ndarray
    dst: np.ndarray
    prob: np.ndarray
    labels: tuple[str, ...]
    node_origin: np.ndarray
    edge_origin: np.ndarray
    root_node_count: int
    root_edge_count: int
    lt_valid: bool = field(init=False)
    # CSR indexes, built once in __post_init__
    out_ptr: np.ndarray = field(init=False, repr=False)
    out_dst: np.ndarray = field(init=False, repr=False)
    out_prob: np.ndarray = field(init=False, repr=False)
    out_eid: np.ndarray = field(init=False, repr=False)
    in_ptr: np.ndarray = field(init=False, repr=False)
    in_src: np.ndarray = field(init=False, repr=False)
    in_prob: np.ndarray = field(init=False, repr=False)
    in_eid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.node_count
        src, dst, prob = self.src, self.dst, self.prob
        if len(src) != len(dst) or len(src) != len(prob):
            raise ValueError("edge arrays must have equal length")
        if len(src) and (src.min() < 0 or src.max() >= n or dst.min() < 0 or dst.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(prob < 0.0) or np.any(prob > 1.0):
            raise ValueError("edge probability outside [0, 1]")
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed")
        pairs = set(zip(src.tolist(), dst.tolist()))
        if len(pairs) != len(src):
            raise ValueError("duplicate (src, dst) edge")
        for name in ("src", "dst", "prob", "node_origin", "edge_origin"):
            getattr(self, name).setflags(write=False)

        def csr(key: np.ndarray, other: np.ndarray):
            order = np.lexsort((other, key)).astype(np.int64)
            ptr = np.zeros(n + 1, dtype=np.int64)
            np.add.at(ptr, key + 1, 1)
            np.cumsum(ptr, out=ptr)
            return ptr, order

        out_ptr, out_order = csr(src, dst)
        in_ptr, in_order = csr(dst, src)
        eid = np.arange(len(src), dtype=np.int64)
        object.__setattr__(self, "out_ptr", out_ptr)
        object.__setattr__(self, "out_dst", dst[out_order].astype(np.int64))
        object.__setattr__(self, "out_prob", prob[out_order])
        object.__setattr__(self, "out_eid", eid[out_order])
        object.__setattr__(self, "in_ptr", in_ptr)
        object.__setattr__(self, "in_src", src[in_order].astype(np.int64))
        object.__setattr__(self, "in_prob", prob[in_order])
        object.__setattr__(self, "in_eid", eid[in_order])
        in_sums = np.zeros(n)
        np.add.at(in_sums, dst, prob)
        object.__setattr__(self, "lt_valid", bool(np.all(in_sums <= 1.0 + LT_SUM_TOL)))
        for name in ("out_ptr", "out_dst", "out_prob", "out_eid", "in_ptr", "in_src", "in_prob", "in_eid"):
            getattr(self, name).setflags(write=False)

    @property
    def edge_count(self) -> int:
        return len(self.src)

    def edges(self) -> Iterable[tuple[int, int, float]]:
        for s, d, p in zip(self.src.tolist(), self.dst.tolist(), self.prob.tolist()):
            yield s, d, p

    def out_neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.out_ptr[v], self.out_ptr[v + 1]
        return self.out_dst[lo:hi], self.out_prob[lo:hi]

    def in_neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.in_ptr[v], self.in_ptr[v + 1]
        return self.in_src[lo:hi], self.in_prob[lo:hi]

    def in_weight_sums(self) -> np.ndarray:
        sums = np.zeros(self.node_count)
        np.add.at(sums, self.dst, self.prob)
        return sums


def build_graph(node_count: int, edges: Sequence[tuple[int, int, float]], labels: Sequence[str] | None = None) -> InfluenceGraph:
    """Graph from dense-id edge triples; the usual constructor in tests."""
    if labels is None:
        labels = [str(i) for i in range(node_count)]
    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    prob = np.array([e[2] for e in edges], dtype=np.float64)
    return InfluenceGraph(
        node_count=node_count,
        src=src,
        dst=dst,
        prob=prob,
        labels=tuple(labels),
        node_origin=np.arange(node_count, dtype=np.int64),
        edge_origin=np.arange(len(edges), dtype=np.int64),
        root_node_count=node_count,
        root_edge_count=len(edges),
    )


def load_edge_list(path, weighting: str = "explicit") -> InfluenceGraph:
    """Parse `src dst [prob]` lines into a graph.

    weighting="explicit" requires the probability column; "inverse_in_degree"
    ignores it and assigns each edge into v the probability 1/in-degree(v),
    which makes the graph LT-valid by construction.
    """
    if weighting not in ("explicit", "inverse_in_degree"):
        raise ValueError(f"unknown weighting {weighting!r}")
    ids: dict[str, int] = {}
    labels: list[str] = []
    src_l: list[int] = []
    dst_l: list[int] = []
    prob_l: list[float] = []
    seen: set[tuple[int, int]] = set()

    def node_id(tok: str) -> int:
        if tok not in ids:
            ids[tok] = len(labels)
            labels.append(tok)
        return ids[tok]

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise EdgeListError(f"{path}:{lineno}: expected 'src dst [prob]', got {line!r}")
            u = node_id(parts[0])
            v = node_id(parts[1])
            if u == v:
                warnings.warn(f"{path}:{lineno}: dropping self-loop on {parts[0]!r}")
                continue
            if (u, v) in seen:
                raise EdgeListError(f"{path}:{lineno}: duplicate edge {parts[0]} -> {parts[1]}")
            seen.add((u, v))
            if weighting == "explicit":
                if len(parts) != 3:
                    raise EdgeListError(f"{path}:{lineno}: explicit weighting requires a probability column")
                try:
                    p = float(parts[2])
                except ValueError as exc:
                    raise EdgeListError(f"{path}:{lineno}: bad probability {parts[2]!r}") from exc
                if not (0.0 <= p <= 1.0):
                    raise EdgeListError(f"{path}:{lineno}: probability {p} outside [0, 1]")
            else:
                p = 0.0  # re-derived below
            src_l.append(u)
            dst_l.append(v)
            prob_l.append(p)

    n = len(labels)
    src = np.array(src_l, dtype=np.int64)
    dst = np.array(dst_l, dtype=np.int64)
    prob = np.array(prob_l, dtype=np.float64)
    if weighting == "inverse_in_degree" and len(dst):
        indeg = np.zeros(n, dtype=np.int64)
        np.add.at(indeg, dst, 1)
        prob = 1.0 / indeg[dst]
    return InfluenceGraph(
        node_count=n,
        src=src,
        dst=dst,
        prob=prob,
        labels=tuple(labels),
        node_origin=np.arange(n, dtype=np.int64),
        edge_origin=np.arange(len(src), dtype=np.int64),
        root_node_count=n,
        root_edge_count=len(src),
    )


def save_edge_list(g: InfluenceGraph, path) -> None:
    """Write `label label prob` lines; probabilities round-trip bit-exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# src dst prob\n")
        for s, d, p in g.edges():
            fh.write(f"{g.labels[s]} {g.labels[d]} {p!r}\n")


def induced_subgraph(g: InfluenceGraph, nodes: Iterable[int]) -> InfluenceGraph:
    """Subgraph keeping exactly the edges with both endpoints in `nodes`.

    New ids follow ascending original id; origin maps are composed so they
    always point at the root graph.
    """
    node_list = sorted(set(int(v) for v in nodes))
    if node_list and (node_list[0] < 0 or node_list[-1] >= g.node_count):
        raise ValueError("node id out of range")
    remap = -np.ones(g.node_count, dtype=np.int64)
    for new, old in enumerate(node_list):
        remap[old] = new
    keep = np.zeros(g.node_count, dtype=bool)
    keep[node_list] = True
    emask = keep[g.src] & keep[g.dst] if g.edge_count else np.zeros(0, dtype=bool)
    node_arr = np.array(node_list, dtype=np.int64)
    return InfluenceGraph(
        node_count=len(node_list),
        src=remap[g.src[emask]],
        dst=remap[g.dst[emask]],
        prob=g.prob[emask].copy(),
        labels=tuple(g.labels[v] for v in node_list),
        node_origin=g.node_origin[node_arr] if len(node_arr) else np.zeros(0, dtype=np.int64),
        edge_origin=g.edge_origin[emask] if g.edge_count else np.zeros(0, dtype=np.int64),
        root_node_count=g.root_node_count,
        root_edge_count=g.root_edge_count,
    )
