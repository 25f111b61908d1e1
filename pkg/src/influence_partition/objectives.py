"""Assignments over the (community, node) ground set and the objective values.

A partial assignment is a set of (community, node) pairs with at most one
community per node (independent in the partition matroid); a Partition is the
total version. The objective of an assignment under any diffusion model is the
sum over communities of the community's spread in its induced subgraph.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .diffusion import (
    DEFAULT_MC_RUNS,
    ExactIcSpread,
    ExactLtSpread,
    IcMcSpread,
    LtMcSpread,
    SpreadEstimate,
)
from .graph import InfluenceGraph
from .mia import DEFAULT_THETA, MiaSpread

Pair = tuple[int, int]

MODELS = ("ic_mc", "lt_mc", "ic_exact", "lt_exact", "mia")

COLUMN_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Assignment:
    """A set of (community, node) pairs."""

    pairs: frozenset[Pair]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Pair]) -> "Assignment":
        return cls(pairs=frozenset((int(i), int(j)) for i, j in pairs))

    @property
    def assigned_nodes(self) -> frozenset[int]:
        return frozenset(j for _, j in self.pairs)

    def community_sets(self) -> dict[int, frozenset[int]]:
        groups: dict[int, set[int]] = {}
        for i, j in self.pairs:
            groups.setdefault(i, set()).add(j)
        return {i: frozenset(s) for i, s in groups.items()}

    def node_to_community(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for i, j in sorted(self.pairs):
            if j in out:
                raise ValueError(f"node {j} assigned to multiple communities")
            out[j] = i
        return out


EMPTY_ASSIGNMENT = Assignment(pairs=frozenset())


@dataclass(frozen=True)
class Partition:
    """Total assignment: every node in exactly one of m communities."""

    m: int
    community_of: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("community count must be >= 1")
        if any(not 0 <= c < self.m for c in self.community_of):
            raise ValueError("community id out of range")

    @property
    def node_count(self) -> int:
        return len(self.community_of)

    def communities(self) -> list[frozenset[int]]:
        out: list[set[int]] = [set() for _ in range(self.m)]
        for j, c in enumerate(self.community_of):
            out[c].add(j)
        return [frozenset(s) for s in out]

    def to_assignment(self) -> Assignment:
        return Assignment(pairs=frozenset((c, j) for j, c in enumerate(self.community_of)))


@dataclass(frozen=True)
class FractionalAssignment:
    """Point in the matroid polytope: an m-by-n matrix with entries in [0, 1]
    and per-node column sums at most 1."""

    x: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.x, dtype=np.float64)  # copy: frozen without aliasing
        if x.ndim != 2:
            raise ValueError("expected an m-by-n matrix")
        if np.any(x < -COLUMN_SUM_TOL) or np.any(x > 1.0 + COLUMN_SUM_TOL):
            raise ValueError("entries must lie in [0, 1]")
        if np.any(x.sum(axis=0) > 1.0 + COLUMN_SUM_TOL):
            raise ValueError("column sums must not exceed 1")
        object.__setattr__(self, "x", x)
        x.setflags(write=False)

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def is_integral(self, tol: float = 1e-12) -> bool:
        return bool(np.all((self.x < tol) | (self.x > 1.0 - tol)))

    def to_assignment(self, tol: float = 1e-12) -> Assignment:
        if not self.is_integral(tol):
            raise ValueError("fractional point is not integral")
        rows, cols = np.nonzero(self.x > 0.5)
        return Assignment(pairs=frozenset(zip(rows.tolist(), cols.tolist())))


def is_independent(a: Assignment) -> bool:
    """True when no node is claimed by two communities."""
    seen: set[int] = set()
    for _, j in a.pairs:
        if j in seen:
            return False
        seen.add(j)
    return True


def make_spread_model(g: InfluenceGraph, model: str, *, r: int = DEFAULT_MC_RUNS,
                      theta: float = DEFAULT_THETA, seed: int = 0):
    """Spread evaluator for subsets of g's nodes under the named model."""
    if model == "ic_mc":
        return IcMcSpread(g, r=r, seed=seed)
    if model == "lt_mc":
        return LtMcSpread(g, r=r, seed=seed)
    if model == "ic_exact":
        return ExactIcSpread(g)
    if model == "lt_exact":
        return ExactLtSpread(g)
    if model == "mia":
        return MiaSpread(g, theta=theta)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def evaluate_f(g: InfluenceGraph, a: Assignment, model: str, *, r: int = DEFAULT_MC_RUNS,
               theta: float = DEFAULT_THETA, seed: int = 0) -> SpreadEstimate:
    """Objective of an independent assignment: total within-community spread.

    Monte-Carlo models report a standard error from per-run totals summed
    across communities (shared randomness makes the sum per run exact).
    """
    if not is_independent(a):
        raise ValueError("assignment places a node in two communities")
    spread = make_spread_model(g, model, r=r, theta=theta, seed=seed)
    communities = [nodes for _, nodes in sorted(a.community_sets().items())]
    if model in ("ic_mc", "lt_mc"):
        totals = np.zeros(spread.r)
        for nodes in communities:
            totals += spread.run_totals(nodes)
        from .diffusion import _estimate_from_runs

        return _estimate_from_runs(totals)
    mean = float(sum(spread.sigma(nodes) for nodes in communities))
    return SpreadEstimate(mean=mean, samples=0, std_error=0.0)


def complete_assignment(a: Assignment, g: InfluenceGraph, m: int, *,
                        theta: float = DEFAULT_THETA) -> Partition:
    """Extend a partial assignment to a total partition.

    Unassigned nodes are placed one at a time (ascending id) into the
    community with the best deterministic arborescence-model gain, ties to
    the lowest community id.
    """
    if not is_independent(a):
        raise ValueError("assignment places a node in two communities")
    node_comm = a.node_to_community()
    if node_comm and max(node_comm.values()) >= m:
        raise ValueError("assignment uses a community id outside range(m)")
    spread = MiaSpread(g, theta=theta)
    communities: list[set[int]] = [set() for _ in range(m)]
    for j, c in node_comm.items():
        communities[c].add(j)
    for j in range(g.node_count):
        if j in node_comm:
            continue
        best_c = 0
        best_gain = -np.inf
        for c in range(m):
            gain = spread.add_marginal(communities[c], j)
            if gain > best_gain + 1e-15:
                best_gain = gain
                best_c = c
        communities[best_c].add(j)
        node_comm[j] = best_c
    return Partition(m=m, community_of=tuple(node_comm[j] for j in range(g.node_count)))


def save_partition_csv(partition: Partition, g: InfluenceGraph, path) -> None:
    """Write `node_label,community_id` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node_label,community_id\n")
        for j, c in enumerate(partition.community_of):
            fh.write(f"{g.labels[j]},{c}\n")


def load_partition_csv(g: InfluenceGraph, path) -> Partition:
    label_to_id = {lab: j for j, lab in enumerate(g.labels)}
    comm = [-1] * g.node_count
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != "node_label,community_id":
            raise ValueError("unexpected partition CSV header")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            lab, c = line.rsplit(",", 1)
            comm[label_to_id[lab]] = int(c)
    if any(c < 0 for c in comm):
        raise ValueError("partition CSV does not cover all nodes")
    return Partition(m=max(comm) + 1 if comm else 1, community_of=tuple(comm))
