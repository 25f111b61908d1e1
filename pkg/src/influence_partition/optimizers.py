"""Solvers: discretized continuous greedy with rounding, the direct greedy,
the sandwich wrapper that keeps the best of the three, and the split/merge
and random baselines.

Every solver is deterministic given its seed; ties break lexicographically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .diffusion import IcMcSpread, LtMcSpread, SpreadEstimate
from .extensions import GradientMatrix, lovasz_gradient, multilinear_gradient, sample_winner_matrix
from .graph import InfluenceGraph
from .mia import MiaSpread
from .objectives import (
    Assignment,
    FractionalAssignment,
    Partition,
    complete_assignment,
    evaluate_f,
    make_spread_model,
)
from .rng import (
    TAG_GREEDY,
    TAG_LOWER_GRAD,
    TAG_MERGE,
    TAG_PIPAGE,
    TAG_RANDOM_PART,
    TAG_ROUND,
    TAG_SPLIT,
    TAG_UPPER_GRAD,
    child_seed,
    derive,
)

INTEGRAL_TOL = 1e-9


@dataclass(frozen=True)
class ContinuousGreedyConfig:
    """Knobs for the discretized ascent; 1/delta_t must be an integer."""

    delta_t: float = 0.05
    gradient_kind: str = "lovasz"  # "lovasz" | "multilinear"
    C: int = 100
    r: int = 500
    theta: float = 0.1
    seed: int = 0
    fbar_model: str = "lt_mc"  # "lt_mc" | "lt_exact" (lovasz side only)

    def steps(self) -> int:
        steps = round(1.0 / self.delta_t)
        if steps < 1 or abs(steps * self.delta_t - 1.0) > 1e-9:
            raise ValueError("1/delta_t must be a positive integer")
        return steps

    def __post_init__(self) -> None:
        self.steps()
        if self.gradient_kind not in ("lovasz", "multilinear"):
            raise ValueError(f"unknown gradient kind {self.gradient_kind!r}")
        if self.C < 1:
            raise ValueError("sample count must be >= 1")


def max_weight_independent_set(w: GradientMatrix) -> Assignment:
    """Exact maximum-weight independent set of the partition matroid: per
    node, the best strictly positive community (ties to the lowest id)."""
    best = np.argmax(w.w, axis=0)
    pairs = [(int(best[j]), j) for j in range(w.w.shape[1]) if w.w[best[j], j] > 0.0]
    return Assignment.from_pairs(pairs)


def _best_per_column(w: np.ndarray, strict: bool) -> list[tuple[int, int]]:
    best = np.argmax(w, axis=0)
    out = []
    for j in range(w.shape[1]):
        if strict and w[best[j], j] <= 0.0:
            continue
        out.append((int(best[j]), j))
    return out


def continuous_greedy(g: InfluenceGraph, m: int, cfg: ContinuousGreedyConfig) -> FractionalAssignment:
    """Discretized ascent through the matroid polytope.

    Each step estimates the relaxation gradient and advances delta_t along a
    matroid base: every node moves toward its argmax-weight community (ties
    to the lowest id), zero weights included. Advancing only on strictly
    positive weights would stall the multilinear side at the origin (all
    single-node communities spread nothing, so the gradient vanishes there)
    and desynchronizes the sorted-prefix subgradient across communities.
    """
    if m < 1:
        raise ValueError("community count must be >= 1")
    steps = cfg.steps()
    counts = np.zeros((m, g.node_count), dtype=np.int64)
    flow = MiaSpread(g, theta=cfg.theta) if cfg.gradient_kind == "multilinear" else None
    for s in range(steps):
        x = FractionalAssignment(counts / steps)
        if cfg.gradient_kind == "lovasz":
            fbar = make_spread_model(g, cfg.fbar_model, r=cfg.r, seed=child_seed(cfg.seed, TAG_UPPER_GRAD, s))
            w = lovasz_gradient(x, fbar)
        else:
            w = multilinear_gradient(x, flow, cfg.C, child_seed(cfg.seed, TAG_LOWER_GRAD, s))
        for i, j in _best_per_column(w.w, strict=False):
            counts[i, j] += 1
    return FractionalAssignment(counts / steps)


def randomized_rounding(x: FractionalAssignment, rng) -> Assignment:
    """Independently per node: community i with probability x_ij, none with
    the leftover mass."""
    gen = rng if isinstance(rng, np.random.Generator) else derive(int(rng), TAG_ROUND)
    u = gen.random(x.n)
    cum = np.cumsum(x.x, axis=0)
    pairs = []
    for j in range(x.n):
        i = int(np.searchsorted(cum[:, j], u[j], side="right"))
        if i < x.m:
            pairs.append((i, j))
    return Assignment.from_pairs(pairs)


def pipage_rounding(x: FractionalAssignment, flow_eval: MiaSpread, *, C: int = 100, seed: int = 0) -> Assignment:
    """Column-wise pipage: repeatedly shift mass between a node's two largest
    fractional entries (or one entry and the unassigned slack) toward the
    endpoint with the larger estimated relaxation value, until integral.

    The relaxation is linear in one column's probabilities given the sampled
    rest, so each decision needs only the mean single-node gains of the two
    candidate communities under shared samples.
    """
    mat = np.array(x.x, dtype=np.float64)
    n, m = x.n, x.m
    for j in range(n):
        decision = 0
        while True:
            col = mat[:, j]
            frac = [i for i in range(m) if INTEGRAL_TOL < col[i] < 1.0 - INTEGRAL_TOL]
            if not frac:
                break
            rest = FractionalAssignment(_with_zero_column(mat, j))
            gen = derive(seed, TAG_PIPAGE, j, decision)
            winner = sample_winner_matrix(rest, C, gen)
            decision += 1
            if len(frac) == 1:
                i = frac[0]
                gain = flow_eval.sampled_add_mean(winner, i, j)
                mat[i, j] = 1.0 if gain >= 0.0 else 0.0
                continue
            frac.sort(key=lambda i: (-col[i], i))
            a, b = frac[0], frac[1]
            ga = flow_eval.sampled_add_mean(winner, a, j)
            gb = flow_eval.sampled_add_mean(winner, b, j)
            # endpoint A: push b's mass into a; endpoint B: the reverse
            shift_a = min(1.0 - col[a], col[b])
            shift_b = min(1.0 - col[b], col[a])
            val_a = (col[a] + shift_a) * ga + (col[b] - shift_a) * gb
            val_b = (col[a] - shift_b) * ga + (col[b] + shift_b) * gb
            if val_a >= val_b:
                mat[a, j] += shift_a
                mat[b, j] -= shift_a
            else:
                mat[a, j] -= shift_b
                mat[b, j] += shift_b
            mat[:, j] = _snap(mat[:, j])
    pairs = [(i, j) for i in range(m) for j in range(n) if mat[i, j] > 0.5]
    return Assignment.from_pairs(pairs)


def _with_zero_column(mat: np.ndarray, j: int) -> np.ndarray:
    out = np.array(mat)
    out[:, j] = 0.0
    return out


def _snap(col: np.ndarray) -> np.ndarray:
    col[np.abs(col) < INTEGRAL_TOL] = 0.0
    col[np.abs(col - 1.0) < INTEGRAL_TOL] = 1.0
    return col


# ---------------------------------------------------------------------------
# Direct greedy on the original objective.
# ---------------------------------------------------------------------------

class _IcGreedyEngine:
    """Incremental live-edge reach bitsets per community; candidate gains and
    commits come out identical to from-scratch evaluation because per-run
    spreads are integer counts."""

    def __init__(self, model: IcMcSpread, m: int):
        g = model.g
        self.g = g
        self.live = model.live
        self.m = m
        self.words = (g.node_count + 63) >> 6
        self.r = model.r
        self.reach: list[np.ndarray | None] = [None] * m
        self.members: list[list[int]] = [[] for _ in range(m)]
        self.masks = [np.zeros(g.node_count, dtype=bool) for _ in range(m)]

    def marginals(self, ci: int, cands: list[int]) -> np.ndarray:
        if not cands:
            return np.zeros(0)
        if self.reach[ci] is None:
            return np.zeros(len(cands))
        g = self.g
        return K.ic_candidate_deltas(
            self.reach[ci], self.live, g.in_ptr, g.in_src, g.in_eid,
            g.out_ptr, g.out_dst, g.out_eid, self.masks[ci],
            np.array(self.members[ci], dtype=np.int64), np.array(cands, dtype=np.int64),
        )

    def commit(self, ci: int, j: int) -> None:
        g = self.g
        if self.reach[ci] is None:
            self.reach[ci] = np.zeros((self.r, g.node_count, self.words), dtype=np.uint64)
        K.ic_commit_node(
            self.reach[ci], self.live, g.in_ptr, g.in_src, g.in_eid,
            g.out_ptr, g.out_dst, g.out_eid, self.masks[ci],
            np.array(self.members[ci], dtype=np.int64), j,
        )
        self.masks[ci][j] = True
        self.members[ci].append(j)


def simple_greedy(g: InfluenceGraph, m: int, f_eval) -> Assignment:
    """Repeatedly assign the (community, node) pair with the largest objective
    gain until every node is assigned; ties to the lowest (community, node)."""
    if m < 1:
        raise ValueError("community count must be >= 1")
    n = g.node_count
    engine = _IcGreedyEngine(f_eval, m) if isinstance(f_eval, IcMcSpread) else None
    communities: list[set[int]] = [set() for _ in range(m)]
    sigmas = [0.0] * m
    table = np.zeros((m, n))
    unassigned = np.ones(n, dtype=bool)
    pairs: list[tuple[int, int]] = []
    for _ in range(n):
        best_i, best_j, best_val = -1, -1, -math.inf
        for i in range(m):
            for j in range(n):
                if unassigned[j] and table[i, j] > best_val:
                    best_i, best_j, best_val = i, j, table[i, j]
        communities[best_i].add(best_j)
        unassigned[best_j] = False
        pairs.append((best_i, best_j))
        cands = [j for j in range(n) if unassigned[j]]
        if engine is not None:
            engine.commit(best_i, best_j)
            table[best_i, cands] = engine.marginals(best_i, cands)
        else:
            sigmas[best_i] = f_eval.sigma(frozenset(communities[best_i]))
            for j in cands:
                table[best_i, j] = f_eval.sigma(frozenset(communities[best_i] | {j})) - sigmas[best_i]
    return Assignment.from_pairs(pairs)


def random_partition(n: int, m: int, seed: int = 0) -> Partition:
    """Uniform independent community per node."""
    if m < 1:
        raise ValueError("community count must be >= 1")
    gen = derive(seed, TAG_RANDOM_PART)
    return Partition(m=m, community_of=tuple(int(c) for c in gen.integers(0, m, size=n)))


# ---------------------------------------------------------------------------
# Split / merge baselines.
# ---------------------------------------------------------------------------

def _bisect(nodes: frozenset[int], f_eval, gen: np.random.Generator) -> tuple[set[int], set[int]]:
    """Random proper split followed by one local-move sweep: each node moves
    to the half with the larger add-gain, never emptying a half."""
    ordered = sorted(nodes)
    bits = gen.integers(0, 2, size=len(ordered))
    halves: list[set[int]] = [set(), set()]
    for v, b in zip(ordered, bits):
        halves[int(b)].add(v)
    if not halves[0]:
        halves[0].add(ordered[0])
        halves[1].discard(ordered[0])
    if not halves[1]:
        mv = next(v for v in ordered if v in halves[0] and len(halves[0]) > 1)
        halves[0].discard(mv)
        halves[1].add(mv)
    for v in ordered:
        own = 0 if v in halves[0] else 1
        other = 1 - own
        if len(halves[own]) == 1:
            continue
        rest = frozenset(halves[own] - {v})
        gain_own = f_eval.sigma(frozenset(halves[own])) - f_eval.sigma(rest)
        gain_other = f_eval.sigma(frozenset(halves[other] | {v})) - f_eval.sigma(frozenset(halves[other]))
        if gain_other > gain_own:
            halves[own].discard(v)
            halves[other].add(v)
    return halves[0], halves[1]


def samkcp(g: InfluenceGraph, m: int, f_eval, seed: int = 0) -> Partition:
    """Recursive splitting: starting from one community, repeatedly bisect the
    community whose split keeps the total objective highest."""
    if m < 1:
        raise ValueError("community count must be >= 1")
    communities: list[set[int]] = [set(range(g.node_count))]
    for rnd in range(m - 1):
        best = None
        for ci, comm in enumerate(communities):
            if len(comm) < 2:
                continue
            h1, h2 = _bisect(frozenset(comm), f_eval, derive(seed, TAG_SPLIT, rnd, ci))
            total = sum(f_eval.sigma(frozenset(c)) for k, c in enumerate(communities) if k != ci)
            total += f_eval.sigma(frozenset(h1)) + f_eval.sigma(frozenset(h2))
            if best is None or total > best[0] + 1e-15:
                best = (total, ci, h1, h2)
        if best is None:
            break
        _, ci, h1, h2 = best
        first, second = sorted([h1, h2], key=min)
        communities[ci] = first
        communities.insert(ci + 1, second)
    communities.sort(key=lambda c: min(c) if c else g.node_count)
    community_of = [0] * g.node_count
    for cid, comm in enumerate(communities):
        for v in comm:
            community_of[v] = cid
    return Partition(m=m, community_of=tuple(community_of))


class _MergeState:
    """Community bookkeeping for the merge baseline. Tracks each community's
    objective value, and for the Monte-Carlo evaluator keeps per-community
    reach bitsets so gains against single-node communities come from one
    batched kernel call instead of full re-evaluations."""

    ENGINE_MIN_SIZE = 16
    ENGINE_CACHE = 3

    def __init__(self, g: InfluenceGraph, f_eval):
        self.g = g
        self.f_eval = f_eval
        self.engine_ready = isinstance(f_eval, IcMcSpread)
        self.comm: dict[int, set[int]] = {j: {j} for j in range(g.node_count)}
        self.value: dict[int, float] = {j: 0.0 for j in range(g.node_count)}
        self.engines: dict[int, tuple[np.ndarray, list[int], np.ndarray]] = {}

    def _engine(self, a: int):
        if a in self.engines:
            # refresh LRU position
            eng = self.engines.pop(a)
            self.engines[a] = eng
            return eng
        r = self.f_eval.r
        n = self.g.node_count
        words = (n + 63) >> 6
        eng = (np.zeros((r, n, words), dtype=np.uint64), [], np.zeros(n, dtype=bool))
        self.engines[a] = eng
        for v in sorted(self.comm[a]):
            self._commit(eng, v)
        while len(self.engines) > self.ENGINE_CACHE:
            oldest = next(iter(self.engines))
            del self.engines[oldest]
        return eng

    def _commit(self, eng, v: int) -> None:
        reach, members, mask = eng
        K.ic_commit_node(
            reach, self.f_eval.live, self.g.in_ptr, self.g.in_src, self.g.in_eid,
            self.g.out_ptr, self.g.out_dst, self.g.out_eid, mask,
            np.array(members, dtype=np.int64), v,
        )
        mask[v] = True
        members.append(v)

    def singleton_gains(self, a: int, singles: list[int]) -> np.ndarray:
        """Gains of merging community a with each single-node community."""
        if not singles:
            return np.zeros(0)
        if self.engine_ready and len(self.comm[a]) >= self.ENGINE_MIN_SIZE:
            reach, members, mask = self._engine(a)
            cands = np.array([next(iter(self.comm[c])) for c in singles], dtype=np.int64)
            return K.ic_candidate_deltas(
                reach, self.f_eval.live, self.g.in_ptr, self.g.in_src, self.g.in_eid,
                self.g.out_ptr, self.g.out_dst, self.g.out_eid, mask,
                np.array(members, dtype=np.int64), cands,
            )
        base = self.value[a]
        return np.array([
            self.f_eval.sigma(frozenset(self.comm[a] | self.comm[c])) - base for c in singles
        ])

    def pair_gain(self, a: int, b: int) -> float:
        merged = self.f_eval.sigma(frozenset(self.comm[a] | self.comm[b]))
        return merged - self.value[a] - self.value[b]

    def merge(self, a: int, b: int, gain: float) -> None:
        self.value[a] = self.value[a] + self.value[b] + gain
        if a in self.engines:
            eng = self.engines[a]
            for v in sorted(self.comm[b]):
                self._commit(eng, v)
        self.comm[a] |= self.comm[b]
        del self.comm[b]
        self.value.pop(b, None)
        self.engines.pop(b, None)


def mamkcp(g: InfluenceGraph, m: int, f_eval, seed: int = 0) -> Partition:
    """Recursive merging: from singletons, repeatedly merge the community pair
    with the largest objective gain (ties lexicographic by community id)."""
    if m < 1:
        raise ValueError("community count must be >= 1")
    n = g.node_count
    if m > n:
        raise ValueError("cannot form more communities than nodes")
    state = _MergeState(g, f_eval)
    adjacent: dict[int, set[int]] = {j: set() for j in range(n)}
    for s, d, _ in g.edges():
        adjacent[s].add(d)
        adjacent[d].add(s)
    gains: dict[tuple[int, int], float] = {}

    def refresh_gains(a: int) -> None:
        neigh = sorted(adjacent[a])
        singles = [c for c in neigh if len(state.comm[c]) == 1]
        for c, gv in zip(singles, state.singleton_gains(a, singles)):
            gains[(a, c) if a < c else (c, a)] = float(gv)
        for c in neigh:
            if len(state.comm[c]) > 1:
                gains[(a, c) if a < c else (c, a)] = state.pair_gain(a, c)

    for a in sorted(adjacent):
        for b in sorted(adjacent[a]):
            if a < b:
                gains[(a, b)] = state.pair_gain(a, b)
    for _ in range(n - m):
        best_key = None
        best_gain = 0.0
        for key in sorted(gains):
            gv = gains[key]
            if best_key is None or gv > best_gain + 1e-15:
                best_key, best_gain = key, gv
        if best_key is None or best_gain <= 1e-15:
            active = sorted(state.comm)
            best_key, best_gain = (active[0], active[1]), gains.get((active[0], active[1]), 0.0)
        a, b = best_key
        state.merge(a, b, best_gain)
        adjacent[a] |= adjacent[b]
        adjacent[a].discard(a)
        adjacent[a].discard(b)
        for c in adjacent[b]:
            if c != a and c in adjacent:
                adjacent[c].discard(b)
                adjacent[c].add(a)
        del adjacent[b]
        gains = {k: v for k, v in gains.items() if a not in k and b not in k}
        refresh_gains(a)
    ordered = sorted(state.comm.values(), key=min)
    community_of = [0] * n
    for cid, nodes in enumerate(ordered):
        for v in nodes:
            community_of[v] = cid
    return Partition(m=m, community_of=tuple(community_of))


# ---------------------------------------------------------------------------
# Sandwich wrapper.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SandwichConfig:
    delta_t: float = 0.05
    C: int = 100
    r: int = 500
    theta: float = 0.1
    seed: int = 0
    f_model: str = "ic_mc"      # "ic_mc" | "ic_exact"
    fbar_model: str = "lt_mc"   # "lt_mc" | "lt_exact"


@dataclass(frozen=True)
class SandwichResult:
    """The three candidate partitions, their objective values, and the
    components of the data-dependent guarantee."""

    partitions: dict[str, Partition]
    f_values: dict[str, SpreadEstimate]
    chosen_method: str
    ratio_upper: float
    ratio_lower_value: float

    @property
    def chosen(self) -> Partition:
        return self.partitions[self.chosen_method]


def sandwich(g: InfluenceGraph, m: int, cfg: SandwichConfig) -> SandwichResult:
    """Solve the relaxed upper and lower bounds and the direct greedy, then
    keep whichever partition scores best under the original objective."""
    up_cfg = ContinuousGreedyConfig(delta_t=cfg.delta_t, gradient_kind="lovasz", C=cfg.C, r=cfg.r,
                                    theta=cfg.theta, seed=child_seed(cfg.seed, TAG_UPPER_GRAD),
                                    fbar_model=cfg.fbar_model)
    x_up = continuous_greedy(g, m, up_cfg)
    a_up = randomized_rounding(x_up, derive(cfg.seed, TAG_ROUND))
    s_up = complete_assignment(a_up, g, m, theta=cfg.theta)

    low_cfg = ContinuousGreedyConfig(delta_t=cfg.delta_t, gradient_kind="multilinear", C=cfg.C, r=cfg.r,
                                     theta=cfg.theta, seed=child_seed(cfg.seed, TAG_LOWER_GRAD))
    x_low = continuous_greedy(g, m, low_cfg)
    flow = MiaSpread(g, theta=cfg.theta)
    a_low = pipage_rounding(x_low, flow, C=cfg.C, seed=child_seed(cfg.seed, TAG_PIPAGE))
    s_low = complete_assignment(a_low, g, m, theta=cfg.theta)

    f_eval = make_spread_model(g, cfg.f_model, r=cfg.r, theta=cfg.theta, seed=child_seed(cfg.seed, TAG_GREEDY))
    a_greedy = simple_greedy(g, m, f_eval)
    s_greedy = complete_assignment(a_greedy, g, m, theta=cfg.theta)

    eval_seed = child_seed(cfg.seed, TAG_MERGE, 777)
    partitions = {"upper": s_up, "lower": s_low, "greedy": s_greedy}
    f_values = {
        name: evaluate_f(g, part.to_assignment(), cfg.f_model, r=cfg.r, theta=cfg.theta, seed=eval_seed)
        for name, part in partitions.items()
    }
    chosen_method = max(("upper", "lower", "greedy"), key=lambda name: f_values[name].mean)

    fbar_up = evaluate_f(g, s_up.to_assignment(), cfg.fbar_model, r=cfg.r, theta=cfg.theta, seed=eval_seed)
    ratio_upper = f_values["upper"].mean / fbar_up.mean if fbar_up.mean > 0 else 1.0
    flow_low = evaluate_f(g, s_low.to_assignment(), "mia", theta=cfg.theta)
    return SandwichResult(
        partitions=partitions,
        f_values=f_values,
        chosen_method=chosen_method,
        ratio_upper=float(min(ratio_upper, 1.0)),
        ratio_lower_value=float(flow_low.mean),
    )
