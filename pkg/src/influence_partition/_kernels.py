"""Numba kernels for the hot loops.

Three families:
  * independent-cascade live-edge closures (bitset transitive reach),
  * linear-threshold selection-chain spread counts,
  * threshold-pruned max-probability-path searches for the arborescence model.

All kernels are deterministic: fixed iteration orders, no parallelism, no
fastmath. Callers own all randomness.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ONE = np.uint64(1)


@njit(cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> _ONE) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return np.int64((x * _H01) >> np.uint64(56))


@njit(cache=True)
def dfs_postorder(out_ptr, out_dst, n):
    """Postorder over the full graph; iterating it forward puts sinks first,
    which makes the live-edge closure converge in few sweeps on DAG-like input."""
    order = np.empty(n, dtype=np.int64)
    state = np.zeros(n, dtype=np.int8)  # 0 unvisited, 1 on stack, 2 done
    stack = np.empty(2 * n + 1, dtype=np.int64)
    edge_pos = np.empty(n, dtype=np.int64)
    cnt = 0
    for root in range(n):
        if state[root] != 0:
            continue
        top = 0
        stack[top] = root
        state[root] = 1
        edge_pos[root] = out_ptr[root]
        while top >= 0:
            u = stack[top]
            advanced = False
            pos = edge_pos[u]
            while pos < out_ptr[u + 1]:
                w = out_dst[pos]
                pos += 1
                if state[w] == 0:
                    edge_pos[u] = pos
                    state[w] = 1
                    edge_pos[w] = out_ptr[w]
                    top += 1
                    stack[top] = w
                    advanced = True
                    break
            if not advanced:
                edge_pos[u] = pos
                state[u] = 2
                order[cnt] = u
                cnt += 1
                top -= 1
    return order


@njit(cache=True)
def ic_run_totals(live, out_ptr, out_dst, out_eid, members, mask, order, n):
    """Per-run sums of single-seed live-edge spreads over `members`.

    live: (runs, edges) liveness; members: node ids inside the community;
    order: all graph nodes in postorder. Returns (runs,) totals where each
    total is sum over seeds of |reachable| - 1 under that run's live graph.
    """
    runs = live.shape[0]
    words = (n + 63) >> 6
    k = len(members)
    reach = np.zeros((n, words), dtype=np.uint64)
    proc = np.empty(k, dtype=np.int64)
    cnt = 0
    for idx in range(n):
        u = order[idx]
        if mask[u]:
            proc[cnt] = u
            cnt += 1
    totals = np.zeros(runs, dtype=np.float64)
    for rn in range(runs):
        for ii in range(k):
            u = members[ii]
            for wd in range(words):
                reach[u, wd] = np.uint64(0)
            reach[u, u >> 6] |= _ONE << np.uint64(u & 63)
        changed = True
        while changed:
            changed = False
            for ii in range(k):
                u = proc[ii]
                for e in range(out_ptr[u], out_ptr[u + 1]):
                    w = out_dst[e]
                    if mask[w] and live[rn, out_eid[e]]:
                        for wd in range(words):
                            nv = reach[u, wd] | reach[w, wd]
                            if nv != reach[u, wd]:
                                reach[u, wd] = nv
                                changed = True
        tot = np.int64(0)
        for ii in range(k):
            u = members[ii]
            for wd in range(words):
                tot += _popcount(reach[u, wd])
        totals[rn] = np.float64(tot - k)
    return totals


@njit(cache=True)
def ic_candidate_deltas(reach, live, in_ptr, in_src, in_eid, out_ptr, out_dst, out_eid, mask, members, cands):
    """Mean spread gain of adding each candidate node to the community whose
    per-run reach bitsets are `reach` (runs, n, words)."""
    runs = reach.shape[0]
    words = reach.shape[2]
    k = len(members)
    q = len(cands)
    out = np.zeros(q, dtype=np.float64)
    inb = np.empty(words, dtype=np.uint64)
    rj = np.empty(words, dtype=np.uint64)
    for rn in range(runs):
        for ci in range(q):
            j = cands[ci]
            any_in = False
            for wd in range(words):
                inb[wd] = np.uint64(0)
            for e in range(in_ptr[j], in_ptr[j + 1]):
                u = in_src[e]
                if mask[u] and live[rn, in_eid[e]]:
                    inb[u >> 6] |= _ONE << np.uint64(u & 63)
                    any_in = True
            for wd in range(words):
                rj[wd] = np.uint64(0)
            rj[j >> 6] = _ONE << np.uint64(j & 63)
            for e in range(out_ptr[j], out_ptr[j + 1]):
                w = out_dst[e]
                if mask[w] and live[rn, out_eid[e]]:
                    for wd in range(words):
                        rj[wd] |= reach[rn, w, wd]
            delta = np.int64(-1)
            for wd in range(words):
                delta += _popcount(rj[wd])
            if any_in:
                for ii in range(k):
                    u = members[ii]
                    hit = False
                    for wd in range(words):
                        if reach[rn, u, wd] & inb[wd] != np.uint64(0):
                            hit = True
                            break
                    if hit:
                        for wd in range(words):
                            delta += _popcount(reach[rn, u, wd] | rj[wd]) - _popcount(reach[rn, u, wd])
            out[ci] += np.float64(delta)
    for ci in range(q):
        out[ci] /= runs
    return out


@njit(cache=True)
def ic_commit_node(reach, live, in_ptr, in_src, in_eid, out_ptr, out_dst, out_eid, mask, members, j):
    """Extend the per-run reach bitsets with node j (mask must not include j yet)."""
    runs = reach.shape[0]
    words = reach.shape[2]
    k = len(members)
    inb = np.empty(words, dtype=np.uint64)
    for rn in range(runs):
        any_in = False
        for wd in range(words):
            inb[wd] = np.uint64(0)
        for e in range(in_ptr[j], in_ptr[j + 1]):
            u = in_src[e]
            if mask[u] and live[rn, in_eid[e]]:
                inb[u >> 6] |= _ONE << np.uint64(u & 63)
                any_in = True
        for wd in range(words):
            reach[rn, j, wd] = np.uint64(0)
        reach[rn, j, j >> 6] = _ONE << np.uint64(j & 63)
        for e in range(out_ptr[j], out_ptr[j + 1]):
            w = out_dst[e]
            if mask[w] and live[rn, out_eid[e]]:
                for wd in range(words):
                    reach[rn, j, wd] |= reach[rn, w, wd]
        if any_in:
            for ii in range(k):
                u = members[ii]
                hit = False
                for wd in range(words):
                    if reach[rn, u, wd] & inb[wd] != np.uint64(0):
                        hit = True
                        break
                if hit:
                    for wd in range(words):
                        reach[rn, u, wd] |= reach[rn, j, wd]


@njit(cache=True)
def lt_run_totals(parent, members, mask):
    """Per-run sums of single-seed linear-threshold spreads over `members`.

    parent[(run, v)] is v's selected full-graph in-neighbor (or -1); within the
    community the selection only counts when the parent is a member. The spread
    of seed i in one run is the number of nodes whose selection chain reaches i,
    so the total equals the sum over members of their distinct-ancestor counts.
    """
    runs = parent.shape[0]
    n = parent.shape[1]
    k = len(members)
    vrun = np.full(n, -1, dtype=np.int64)
    status = np.zeros(n, dtype=np.int8)
    dv = np.zeros(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    totals = np.zeros(runs, dtype=np.float64)
    for rn in range(runs):
        tot = np.int64(0)
        for ii in range(k):
            v = members[ii]
            if vrun[v] == rn:
                tot += dv[v]
                continue
            depth = 0
            cur = v
            unwind_from = -1
            while True:
                stack[depth] = cur
                depth += 1
                vrun[cur] = rn
                status[cur] = 0
                nxt = parent[rn, cur]
                if nxt < 0 or not mask[nxt]:
                    dv[cur] = 0
                    status[cur] = 1
                    unwind_from = depth - 2
                    break
                if vrun[nxt] == rn:
                    if status[nxt] == 1:
                        dv[cur] = 1 + dv[nxt]
                        status[cur] = 1
                        unwind_from = depth - 2
                    else:
                        pos = depth - 1
                        while stack[pos] != nxt:
                            pos -= 1
                        cyclen = depth - pos
                        for t in range(pos, depth):
                            dv[stack[t]] = cyclen - 1
                            status[stack[t]] = 1
                        unwind_from = pos - 1
                    break
                cur = nxt
            for t in range(unwind_from, -1, -1):
                dv[stack[t]] = 1 + dv[stack[t + 1]]
                status[stack[t]] = 1
            tot += dv[v]
        totals[rn] = np.float64(tot)
    return totals


# ---------------------------------------------------------------------------
# Max-probability-path search (threshold-pruned Dijkstra over products).
# Ties broken by fewer hops, then by smaller next-node id, which keeps the
# per-target parent maps mutually consistent (union of paths is a tree).
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _heap_less(hp_pp, hp_hops, hp_node, a, b):
    if hp_pp[a] != hp_pp[b]:
        return hp_pp[a] > hp_pp[b]
    if hp_hops[a] != hp_hops[b]:
        return hp_hops[a] < hp_hops[b]
    return hp_node[a] < hp_node[b]


@njit(cache=True)
def _heap_push(hp_pp, hp_hops, hp_node, size, pp, hops, node):
    i = size
    hp_pp[i] = pp
    hp_hops[i] = hops
    hp_node[i] = node
    while i > 0:
        par = (i - 1) >> 1
        if _heap_less(hp_pp, hp_hops, hp_node, i, par):
            hp_pp[i], hp_pp[par] = hp_pp[par], hp_pp[i]
            hp_hops[i], hp_hops[par] = hp_hops[par], hp_hops[i]
            hp_node[i], hp_node[par] = hp_node[par], hp_node[i]
            i = par
        else:
            break
    return size + 1


@njit(cache=True)
def _heap_pop(hp_pp, hp_hops, hp_node, size):
    size -= 1
    hp_pp[0], hp_pp[size] = hp_pp[size], hp_pp[0]
    hp_hops[0], hp_hops[size] = hp_hops[size], hp_hops[0]
    hp_node[0], hp_node[size] = hp_node[size], hp_node[0]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        best = left
        right = left + 1
        if right < size and _heap_less(hp_pp, hp_hops, hp_node, right, left):
            best = right
        if _heap_less(hp_pp, hp_hops, hp_node, best, i):
            hp_pp[i], hp_pp[best] = hp_pp[best], hp_pp[i]
            hp_hops[i], hp_hops[best] = hp_hops[best], hp_hops[i]
            hp_node[i], hp_node[best] = hp_node[best], hp_node[i]
            i = best
        else:
            break
    return size


@njit(cache=True)
def max_prob_tree(ptr, nbr, prob, mask, root, theta, bpp, bhops, bpar, seen_st, fin_st, stamp, hp_pp, hp_hops, hp_node, out_nodes):
    """Best-path probabilities from every mask node to `root` (or from root,
    when given the out-CSR), pruned below `theta`. Fills out_nodes with the
    finalized nodes (root first) and returns their count; bpp/bhops/bpar hold
    the values for nodes with seen/fin stamps equal to `stamp`."""
    size = 0
    bpp[root] = 1.0
    bhops[root] = 0
    bpar[root] = -1
    seen_st[root] = stamp
    size = _heap_push(hp_pp, hp_hops, hp_node, size, 1.0, 0, root)
    count = 0
    while size > 0:
        pp = hp_pp[0]
        hops = hp_hops[0]
        u = hp_node[0]
        size = _heap_pop(hp_pp, hp_hops, hp_node, size)
        if fin_st[u] == stamp:
            continue
        if pp != bpp[u] or hops != bhops[u]:
            continue  # stale entry
        fin_st[u] = stamp
        out_nodes[count] = u
        count += 1
        for e in range(ptr[u], ptr[u + 1]):
            v = nbr[e]
            if v != root and (not mask[v]):
                continue
            if fin_st[v] == stamp:
                continue
            p = prob[e]
            if p <= 0.0:
                continue
            cpp = pp * p
            if cpp < theta:
                continue
            chops = hops + 1
            if seen_st[v] != stamp:
                seen_st[v] = stamp
                bpp[v] = cpp
                bhops[v] = chops
                bpar[v] = u
                size = _heap_push(hp_pp, hp_hops, hp_node, size, cpp, chops, v)
            elif cpp > bpp[v] or (cpp == bpp[v] and chops < bhops[v]):
                bpp[v] = cpp
                bhops[v] = chops
                bpar[v] = u
                size = _heap_push(hp_pp, hp_hops, hp_node, size, cpp, chops, v)
            elif cpp == bpp[v] and chops == bhops[v] and u < bpar[v]:
                bpar[v] = u
    return count


@njit(cache=True)
def _new_scratch(n, edge_cap):
    bpp = np.zeros(n, dtype=np.float64)
    bhops = np.zeros(n, dtype=np.int64)
    bpar = np.full(n, -1, dtype=np.int64)
    seen_st = np.full(n, -1, dtype=np.int64)
    fin_st = np.full(n, -1, dtype=np.int64)
    hp_pp = np.zeros(edge_cap + 2, dtype=np.float64)
    hp_hops = np.zeros(edge_cap + 2, dtype=np.int64)
    hp_node = np.zeros(edge_cap + 2, dtype=np.int64)
    out_nodes = np.zeros(n, dtype=np.int64)
    return bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes


@njit(cache=True)
def miia_tree(ptr, nbr, prob, mask, root, theta):
    """Single threshold-pruned best-path tree; returns aligned arrays
    (nodes in finalization order with the root first, pp, hops, parent)."""
    n = len(mask)
    cap = len(nbr)
    bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes = _new_scratch(n, cap)
    cnt = max_prob_tree(ptr, nbr, prob, mask, root, theta, bpp, bhops, bpar, seen_st, fin_st, 0, hp_pp, hp_hops, hp_node, out_nodes)
    nodes = out_nodes[:cnt].copy()
    pp = np.empty(cnt, dtype=np.float64)
    hops = np.empty(cnt, dtype=np.int64)
    par = np.empty(cnt, dtype=np.int64)
    for t in range(cnt):
        u = nodes[t]
        pp[t] = bpp[u]
        hops[t] = bhops[u]
        par[t] = bpar[u]
    return nodes, pp, hops, par


@njit(cache=True)
def mia_sigma(in_ptr, in_src, in_prob, mask, members, theta):
    """Arborescence-model spread of a community: for every target, the sum of
    best-path probabilities (>= theta) from the other members."""
    n = len(mask)
    cap = len(in_src)
    bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes = _new_scratch(n, cap)
    total = 0.0
    stamp = 0
    for ii in range(len(members)):
        v = members[ii]
        cnt = max_prob_tree(in_ptr, in_src, in_prob, mask, v, theta, bpp, bhops, bpar, seen_st, fin_st, stamp, hp_pp, hp_hops, hp_node, out_nodes)
        for t in range(1, cnt):
            total += bpp[out_nodes[t]]
        stamp += 1
    return total


@njit(cache=True)
def mia_add_marginal(in_ptr, in_src, in_prob, out_ptr, out_dst, out_prob, mask, j, theta,
                     bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes,
                     u_nodes, u_pp, v_nodes, v_pp, stamp):
    """Spread gain of adding node j to the community `mask` (j not in mask).

    Decomposes into new paths into j, new paths from j, and improvements of
    existing best paths that route through j. Returns (delta, next_stamp).
    """
    cu = max_prob_tree(in_ptr, in_src, in_prob, mask, j, theta, bpp, bhops, bpar, seen_st, fin_st, stamp, hp_pp, hp_hops, hp_node, out_nodes)
    term_in = 0.0
    max_u = 0.0
    n_u = 0
    for t in range(1, cu):
        u = out_nodes[t]
        u_nodes[n_u] = u
        u_pp[n_u] = bpp[u]
        if bpp[u] > max_u:
            max_u = bpp[u]
        term_in += bpp[u]
        n_u += 1
    stamp += 1
    cv = max_prob_tree(out_ptr, out_dst, out_prob, mask, j, theta, bpp, bhops, bpar, seen_st, fin_st, stamp, hp_pp, hp_hops, hp_node, out_nodes)
    term_out = 0.0
    n_v = 0
    for t in range(1, cv):
        v = out_nodes[t]
        v_nodes[n_v] = v
        v_pp[n_v] = bpp[v]
        term_out += bpp[v]
        n_v += 1
    stamp += 1
    term_reroute = 0.0
    for vi in range(n_v):
        v = v_nodes[vi]
        ppjv = v_pp[vi]
        if ppjv * max_u < theta:
            continue
        max_prob_tree(in_ptr, in_src, in_prob, mask, v, theta, bpp, bhops, bpar, seen_st, fin_st, stamp, hp_pp, hp_hops, hp_node, out_nodes)
        for ui in range(n_u):
            u = u_nodes[ui]
            if u == v:
                continue
            cand = u_pp[ui] * ppjv
            if cand < theta:
                continue
            old = 0.0
            if fin_st[u] == stamp:
                old = bpp[u]
            if cand > old:
                term_reroute += cand - old
        stamp += 1
    return term_in + term_out + term_reroute, stamp


@njit(cache=True)
def multilinear_entry_mean(in_ptr, in_src, in_prob, out_ptr, out_dst, out_prob, winner, comm, j, theta):
    """Mean sampled gradient entry for assigning node j to community `comm`.

    winner[(c, v)] is the community that holds v in sample c (or -1);
    column j of `winner` never equals `comm`. When sample c places j in some
    other community k, the gain of moving j out of k is subtracted.
    """
    samples = winner.shape[0]
    n = winner.shape[1]
    cap = len(in_src)
    bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes = _new_scratch(n, cap)
    u_nodes = np.zeros(n, dtype=np.int64)
    u_pp = np.zeros(n, dtype=np.float64)
    v_nodes = np.zeros(n, dtype=np.int64)
    v_pp = np.zeros(n, dtype=np.float64)
    mask = np.zeros(n, dtype=np.bool_)
    stamp = 0
    acc = 0.0
    for c in range(samples):
        for v in range(n):
            mask[v] = winner[c, v] == comm
        mask[j] = False
        d, stamp = mia_add_marginal(in_ptr, in_src, in_prob, out_ptr, out_dst, out_prob, mask, j, theta,
                                    bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes,
                                    u_nodes, u_pp, v_nodes, v_pp, stamp)
        k = winner[c, j]
        if k >= 0:
            for v in range(n):
                mask[v] = winner[c, v] == k
            mask[j] = False
            d2, stamp = mia_add_marginal(in_ptr, in_src, in_prob, out_ptr, out_dst, out_prob, mask, j, theta,
                                         bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes,
                                         u_nodes, u_pp, v_nodes, v_pp, stamp)
            d -= d2
        acc += d
    return acc / samples


@njit(cache=True)
def mean_add_marginal(in_ptr, in_src, in_prob, out_ptr, out_dst, out_prob, winner, comm, j, theta):
    """Mean gain over samples of adding node j to community `comm`."""
    samples = winner.shape[0]
    n = winner.shape[1]
    cap = len(in_src)
    bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes = _new_scratch(n, cap)
    u_nodes = np.zeros(n, dtype=np.int64)
    u_pp = np.zeros(n, dtype=np.float64)
    v_nodes = np.zeros(n, dtype=np.int64)
    v_pp = np.zeros(n, dtype=np.float64)
    mask = np.zeros(n, dtype=np.bool_)
    stamp = 0
    acc = 0.0
    for c in range(samples):
        for v in range(n):
            mask[v] = winner[c, v] == comm
        mask[j] = False
        d, stamp = mia_add_marginal(in_ptr, in_src, in_prob, out_ptr, out_dst, out_prob, mask, j, theta,
                                    bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes,
                                    u_nodes, u_pp, v_nodes, v_pp, stamp)
        acc += d
    return acc / samples


@njit(cache=True)
def single_add_marginal(in_ptr, in_src, in_prob, out_ptr, out_dst, out_prob, mask, j, theta):
    """Spread gain of adding node j to the fixed community `mask`."""
    n = len(mask)
    cap = len(in_src)
    bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes = _new_scratch(n, cap)
    u_nodes = np.zeros(n, dtype=np.int64)
    u_pp = np.zeros(n, dtype=np.float64)
    v_nodes = np.zeros(n, dtype=np.int64)
    v_pp = np.zeros(n, dtype=np.float64)
    d, _ = mia_add_marginal(in_ptr, in_src, in_prob, out_ptr, out_dst, out_prob, mask, j, theta,
                            bpp, bhops, bpar, seen_st, fin_st, hp_pp, hp_hops, hp_node, out_nodes,
                            u_nodes, u_pp, v_nodes, v_pp, 0)
    return d
