"""Random instance generators for sweeps and property tests."""
from __future__ import annotations

import itertools

import numpy as np

from .network import InfoNetwork, build_network


def _row_weights(rng: np.random.Generator, k: int, grid: float | None) -> list[float]:
    if k == 0:
        return []
    if grid is None:
        if rng.random() < 0.3:
            w = rng.dirichlet(np.ones(k))
        else:
            w = rng.dirichlet(np.ones(k + 1))[:k]
        # keep weights away from 0 so every edge is meaningful
        w = np.maximum(w, 1e-3)
        w = w / max(1.0, w.sum())
        return [float(x) for x in w]
    steps = int(round(1 / grid))
    # a random composition of at most `steps` units into k positive parts
    total = int(rng.integers(k, steps + 1))
    cuts = np.sort(rng.choice(np.arange(1, total), size=k - 1, replace=False)) if k > 1 else np.array([], int)
    parts = np.diff(np.concatenate([[0], cuts, [total]]))
    return [round(float(p) * grid, 12) for p in parts]


def random_dag(
    rng: np.random.Generator,
    n: int,
    max_edges: int | None = None,
    edge_prob: float = 0.5,
    grid: float | None = None,
) -> InfoNetwork:
    """Random acyclic network on labels v0..v{n-1} with a hidden random ordering."""
    order = rng.permutation(n)
    pairs = [(int(order[i]), int(order[j])) for i in range(n) for j in range(i)]
    chosen = [p for p in pairs if rng.random() < edge_prob]
    if max_edges is not None and len(chosen) > max_edges:
        keep = rng.choice(len(chosen), size=max_edges, replace=False)
        chosen = [chosen[i] for i in sorted(keep)]
    return _weighted(rng, n, chosen, grid)


def random_network(
    rng: np.random.Generator,
    n: int,
    max_edges: int | None = None,
    edge_prob: float = 0.4,
    self_loops: bool = False,
    grid: float | None = None,
) -> InfoNetwork:
    """Random network that may contain directed cycles."""
    pairs = [(v, u) for v, u in itertools.product(range(n), repeat=2) if self_loops or v != u]
    chosen = [p for p in pairs if rng.random() < edge_prob]
    if max_edges is not None and len(chosen) > max_edges:
        keep = rng.choice(len(chosen), size=max_edges, replace=False)
        chosen = [chosen[i] for i in sorted(keep)]
    return _weighted(rng, n, chosen, grid)


def _weighted(rng, n, pairs, grid) -> InfoNetwork:
    labels = [f"v{i}" for i in range(n)]
    by_src: dict[int, list[int]] = {}
    for v, u in pairs:
        by_src.setdefault(v, []).append(u)
    edges = []
    for v in sorted(by_src):
        targets = sorted(by_src[v])
        for u, w in zip(targets, _row_weights(rng, len(targets), grid)):
            edges.append((labels[v], labels[u], w))
    return build_network(labels, edges)


def random_seeds(rng: np.random.Generator, net: InfoNetwork, p_transient=0.25, p_permanent=0.15):
    """Random disjoint (transient, permanent) index sets."""
    a, ah = set(), set()
    for v in net.nodes:
        r = rng.random()
        if r < p_transient:
            a.add(v)
        elif r < p_transient + p_permanent:
            ah.add(v)
    return frozenset(a), frozenset(ah)


def random_undirected_graph(rng: np.random.Generator, n: int, edge_prob: float = 0.5):
    nodes = [f"x{i}" for i in range(n)]
    edges = [(nodes[i], nodes[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < edge_prob]
    return nodes, edges
