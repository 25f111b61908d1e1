"""Bundled synthetic networks and their generator.

Two directed graphs at the scale of small social-network benchmarks ship with
the package: `collab-379` (379 nodes / 914 edges) and `vote-914` (914 nodes /
2914 edges). Both were produced by `generate_planted_graph` with the seeds
recorded below; files carry no probability column and are meant to be loaded
with inverse in-degree weighting.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .rng import derive

BUNDLED = {
    "collab-379": ("collab_379.txt", 379, 914, 101),
    "vote-914": ("vote_914.txt", 914, 2914, 202),
}


def bundled_dataset_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled dataset {name!r}; available: {sorted(BUNDLED)}")
    fname = BUNDLED[name][0]
    return Path(str(resources.files("influence_partition").joinpath("data", fname)))


def resolve_dataset(name_or_path: str) -> Path:
    """Bundled name or filesystem path."""
    if name_or_path in BUNDLED:
        return bundled_dataset_path(name_or_path)
    return Path(name_or_path)


def generate_planted_graph(n: int, e: int, seed: int, groups: int = 8, p_in: float = 0.7) -> list[tuple[int, int]]:
    """Directed planted-community edge list: a backbone touching every node
    plus preferential within-group edges; no self-loops or duplicates."""
    gen = derive(seed)
    group_of = gen.integers(0, groups, size=n)
    edges: set[tuple[int, int]] = set()
    for v in range(1, n):
        candidates = np.flatnonzero(group_of[:v] == group_of[v])
        u = int(gen.choice(candidates)) if len(candidates) else int(gen.integers(0, v))
        if gen.random() < 0.5:
            edges.add((u, v))
        else:
            edges.add((v, u))
    while len(edges) < e:
        u = int(gen.integers(0, n))
        if gen.random() < p_in:
            pool = np.flatnonzero(group_of == group_of[u])
        else:
            pool = np.arange(n)
        v = int(gen.choice(pool))
        if u != v and (u, v) not in edges:
            edges.add((u, v))
    return sorted(edges)


def write_bundled_file(name: str, out_dir: Path) -> Path:
    fname, n, e, seed = BUNDLED[name]
    edges = generate_planted_graph(n, e, seed)
    path = out_dir / fname
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# synthetic directed network: {n} nodes, {e} edges\n")
        fh.write("# load with inverse in-degree weighting\n")
        for u, v in edges:
            fh.write(f"n{u} n{v}\n")
    return path
