"""Information networks: construction, normalization and structural transforms.

An edge ``(v, u, b)`` means that ``u`` influences ``v`` with weight ``b``; the
out-neighbors of ``v`` are the nodes whose activity feeds into ``v``'s
activation level.  Every network carries a void node that absorbs the slack
``1 - sum(b_vu)`` of each row, so the weight matrix is row-stochastic.

Nodes are addressed by dense integer indices internally.  The void node always
sits at the last index.
"""
from __future__ import annotations

import csv
import graphlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CyclicNetwork,
    DuplicateEdge,
    NetworkError,
    ReservedLabel,
    UnknownEndpoint,
    VoidInPermanentSet,
    VoidTarget,
    WeightOutOfRange,
    WeightSumExceedsOne,
)

VOID_LABEL = "__void"
DUMMY_PREFIX = "__dummy:"
WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class InfoNetwork:
    labels: tuple[str, ...]
    raw_edges: tuple[tuple[int, int, float], ...]
    weights: np.ndarray = field(repr=False)
    counted: np.ndarray = field(repr=False)
    acyclic: bool
    index: dict[str, int] = field(repr=False)

    @property
    def void(self) -> int:
        return len(self.labels) - 1

    @property
    def size(self) -> int:
        """Number of nodes including the void node."""
        return len(self.labels)

    @property
    def nodes(self) -> range:
        """Indices of all non-void nodes."""
        return range(len(self.labels) - 1)

    @property
    def n_counted(self) -> int:
        return int(self.counted.sum())

    def idx(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise UnknownEndpoint(f"unknown node label {label!r}") from None

    def label(self, i: int) -> str:
        return self.labels[i]

    def out_neighbors(self, v: int) -> list[tuple[int, float]]:
        row = self.weights[v]
        return [(int(u), float(row[u])) for u in np.flatnonzero(row)]

    def edges(self) -> list[tuple[int, int, float]]:
        """All normalized edges, void edges and the void self-loop included."""
        src, dst = np.nonzero(self.weights)
        return [(int(v), int(u), float(self.weights[v, u])) for v, u in zip(src, dst)]

    def to_dict(self) -> dict:
        """Serializable form with pre-normalization weights; the void node is omitted."""
        return {
            "nodes": list(self.labels[:-1]),
            "edges": [
                {"src": self.labels[v], "dst": self.labels[u], "weight": w}
                for v, u, w in self.raw_edges
            ],
        }

    def __repr__(self):
        return (
            f"InfoNetwork(n={self.size - 1}, edges={len(self.raw_edges)}, "
            f"acyclic={self.acyclic})"
        )


def _check_label(label: str, allow_reserved: bool) -> None:
    if not isinstance(label, str):
        raise NetworkError(f"node labels must be strings, got {label!r}")
    if allow_reserved:
        return
    if label == VOID_LABEL or label.startswith(DUMMY_PREFIX):
        raise ReservedLabel(f"label {label!r} is reserved")


def _assemble(
    labels: Sequence[str],
    edges: Iterable[tuple[int, int, float]],
    counted: Sequence[bool] | None = None,
    allow_reserved: bool = False,
) -> InfoNetwork:
    labels = list(labels)
    n = len(labels)
    index: dict[str, int] = {}
    for i, lab in enumerate(labels):
        _check_label(lab, allow_reserved)
        if lab in index:
            raise NetworkError(f"duplicate node label {lab!r}")
        index[lab] = i

    weights = np.zeros((n + 1, n + 1))
    raw = []
    seen = set()
    for v, u, w in edges:
        w = float(w)
        if (v, u) in seen:
            raise DuplicateEdge(f"parallel edge {labels[v]!r} -> {labels[u]!r}")
        seen.add((v, u))
        if not (0.0 < w <= 1.0) or not np.isfinite(w):
            raise WeightOutOfRange(f"edge {labels[v]!r} -> {labels[u]!r} has weight {w}")
        weights[v, u] = w
        raw.append((v, u, w))

    sums = weights[:n, :n].sum(axis=1) if n else np.zeros(0)
    for v in range(n):
        slack = 1.0 - sums[v]
        if slack < -WEIGHT_TOL:
            raise WeightSumExceedsOne(
                f"outgoing weights of {labels[v]!r} sum to {sums[v]!r} > 1"
            )
        if slack > WEIGHT_TOL:
            weights[v, n] = slack
    weights[n, n] = 1.0
    weights.setflags(write=False)

    if counted is None:
        counted_arr = np.ones(n + 1, dtype=bool)
    else:
        counted_arr = np.array(list(counted) + [False], dtype=bool)
    counted_arr[n] = False
    counted_arr.setflags(write=False)

    all_labels = tuple(labels) + (VOID_LABEL,)
    index[VOID_LABEL] = n
    raw.sort()
    net = InfoNetwork(
        labels=all_labels,
        raw_edges=tuple(raw),
        weights=weights,
        counted=counted_arr,
        acyclic=True,
        index=index,
    )
    object.__setattr__(net, "acyclic", find_cycle(net) is None)
    return net


def build_network(
    nodes: Sequence[str],
    edges: Iterable[tuple[str, str, float]],
) -> InfoNetwork:
    """Build a normalized network from labels and ``(src, dst, weight)`` triples.

    Weights must lie in (0, 1] and each node's outgoing weights may sum to at
    most 1; the remainder is routed to the void node.
    """
    nodes = list(nodes)
    lookup = {lab: i for i, lab in enumerate(nodes)}
    resolved = []
    for src, dst, w in edges:
        if src not in lookup or dst not in lookup:
            missing = src if src not in lookup else dst
            raise UnknownEndpoint(f"edge endpoint {missing!r} is not a declared node")
        resolved.append((lookup[src], lookup[dst], w))
    return _assemble(nodes, resolved)


def find_cycle(net: InfoNetwork) -> list[int] | None:
    """Return one directed cycle among non-void nodes (as indices), or None."""
    void = net.void
    ts = graphlib.TopologicalSorter()
    for v in net.nodes:
        ts.add(v, *(u for u, _ in net.out_neighbors(v) if u != void))
    try:
        ts.prepare()
    except graphlib.CycleError as exc:
        cyc = list(exc.args[1][:-1])
        if len(cyc) > 1 and net.weights[cyc[0], cyc[1]] == 0:
            cyc.reverse()
        return cyc
    return None


def topological_order(net: InfoNetwork) -> list[int]:
    """Descendant-first order: for every edge ``(v, u)``, ``u`` precedes ``v``.

    The void node comes first.
    """
    void = net.void
    ts = graphlib.TopologicalSorter()
    for v in net.nodes:
        ts.add(v, *(u for u, _ in net.out_neighbors(v) if u != void))
    try:
        order = list(ts.static_order())
    except graphlib.CycleError:
        cyc = find_cycle(net)
        raise CyclicNetwork([net.labels[i] for i in cyc]) from None
    return [void] + order


def require_acyclic(net: InfoNetwork) -> None:
    if not net.acyclic:
        cyc = find_cycle(net)
        raise CyclicNetwork([net.labels[i] for i in cyc])


@dataclass(frozen=True, eq=False)
class TransformedNetwork:
    """A network whose permanent seeds are emulated by chains of dummy nodes."""

    base: InfoNetwork
    network: InfoNetwork
    permanent: frozenset[int]
    horizon: int
    chains: dict[int, tuple[int, ...]]
    mapping: np.ndarray

    @property
    def dummies(self) -> frozenset[int]:
        return frozenset(d for chain in self.chains.values() for d in chain)

    def transient_seed(self, transient: Iterable[int] = ()) -> frozenset[int]:
        """The combined transient seed ``A | A_hat | D`` on the transformed network."""
        a = {int(self.mapping[v]) for v in transient}
        a |= {int(self.mapping[y]) for y in self.permanent}
        return frozenset(a | self.dummies)

    def lift_thresholds(self, theta: np.ndarray, dummy_value: float = 0.5) -> np.ndarray:
        """Carry a threshold vector of the base network over to the transformed one.

        Dummy thresholds are irrelevant (their activation level is 0 or 1).
        """
        out = np.full(self.network.size, dummy_value)
        out[self.mapping] = theta
        return out


def transform_permanent(net: InfoNetwork, permanent: Iterable[int], horizon: int) -> TransformedNetwork:
    perm = frozenset(int(y) for y in permanent)
    if net.void in perm:
        raise VoidInPermanentSet("the void node cannot be a permanent seed")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n = net.size - 1
    labels = list(net.labels[:-1])
    counted = list(net.counted[:-1])
    edges = [(v, u, w) for v, u, w in net.raw_edges if v not in perm]
    chains = {}
    for y in sorted(perm):
        chain = []
        for i in range(1, horizon + 1):
            chain.append(len(labels))
            labels.append(f"{DUMMY_PREFIX}{net.labels[y]}:{i}")
            counted.append(False)
        edges.append((y, chain[0], 1.0))
        edges.extend((a, b, 1.0) for a, b in zip(chain, chain[1:]))
        # the chain tail gets no out-edge: normalization routes it to the void node
        chains[y] = tuple(chain)
    new = _assemble(labels, edges, counted=counted, allow_reserved=True)
    mapping = np.arange(n + 1)
    mapping[n] = new.void
    mapping.setflags(write=False)
    return TransformedNetwork(net, new, perm, horizon, chains, mapping)


def amplify(net: InfoNetwork, target: int, m: int) -> InfoNetwork:
    """Attach ``m`` fresh leaves, each copying ``target``'s state one step later."""
    if target == net.void:
        raise VoidTarget("cannot amplify the void node")
    if m < 1:
        raise ValueError("m must be >= 1")
    labels = list(net.labels[:-1])
    taken = set(labels)
    edges = list(net.raw_edges)
    counted = list(net.counted[:-1])
    j = 0
    for _ in range(m):
        while f"__leaf:{net.labels[target]}:{j}" in taken:
            j += 1
        lab = f"__leaf:{net.labels[target]}:{j}"
        taken.add(lab)
        edges.append((len(labels), target, 1.0))
        labels.append(lab)
        counted.append(True)
    return _assemble(labels, edges, counted=counted, allow_reserved=True)


def vertex_cover_reduction(
    nodes: Sequence[str],
    edges: Iterable[tuple[str, str]],
    ordering: Sequence[str] | None = None,
    dummy_label: str = "__sink",
) -> tuple[InfoNetwork, int]:
    """Acyclic instance used to show NP-hardness via vertex cover.

    Each undirected edge is directed from the later node to the earlier one in
    ``ordering`` (the later node is influenced by the earlier).  Nodes left
    without out-edges point to an extra dummy node; every node splits its
    weight uniformly over its out-edges.
    """
    nodes = list(nodes)
    if not nodes:
        raise NetworkError("graph must have at least one node")
    if ordering is None:
        ordering = nodes
    if sorted(ordering) != sorted(nodes):
        raise NetworkError("ordering must be a permutation of the nodes")
    if dummy_label in nodes:
        raise NetworkError(f"dummy label {dummy_label!r} collides with a graph node")
    rank = {lab: i for i, lab in enumerate(ordering)}
    out: dict[str, set[str]] = {lab: set() for lab in nodes}
    for a, b in edges:
        if a not in rank or b not in rank:
            raise UnknownEndpoint(f"edge {a!r}-{b!r} has an unknown endpoint")
        if a == b:
            raise NetworkError("self-loops are not allowed in a simple graph")
        later, earlier = (a, b) if rank[a] > rank[b] else (b, a)
        out[later].add(earlier)
    all_nodes = nodes + [dummy_label]
    directed = []
    for lab in nodes:
        targets = sorted(out[lab], key=rank.get) or [dummy_label]
        w = 1.0 / len(targets)
        directed.extend((lab, t, w) for t in targets)
    net = _assemble(
        all_nodes,
        [(all_nodes.index(s), all_nodes.index(d), w) for s, d, w in directed],
    )
    return net, net.idx(dummy_label)


# -- I/O ---------------------------------------------------------------------


def network_from_dict(data: dict) -> InfoNetwork:
    nodes = list(data["nodes"])
    edges = [(e["src"], e["dst"], e["weight"]) for e in data.get("edges", [])]
    lookup = {lab: i for i, lab in enumerate(nodes)}
    for s, d, _ in edges:
        for x in (s, d):
            if x not in lookup:
                raise UnknownEndpoint(f"edge endpoint {x!r} is not a declared node")
    # generated labels (leaves, dummies) round-trip through serialization
    return _assemble(nodes, [(lookup[s], lookup[d], w) for s, d, w in edges], allow_reserved=True)


def read_edge_csv(path) -> InfoNetwork:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["src", "dst", "weight"]:
            raise NetworkError("CSV edge list needs the header row 'src,dst,weight'")
        rows = [(r["src"].strip(), r["dst"].strip(), float(r["weight"])) for r in reader]
    nodes: dict[str, None] = {}
    for s, d, _ in rows:
        nodes.setdefault(s)
        nodes.setdefault(d)
    return build_network(list(nodes), rows)


def load_network(path) -> InfoNetwork:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_edge_csv(path)
    with open(path) as fh:
        return network_from_dict(json.load(fh))


def save_network(net: InfoNetwork, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["src", "dst", "weight"])
            for v, u, w in net.raw_edges:
                writer.writerow([net.labels[v], net.labels[u], repr(w)])
        return
    with open(path, "w") as fh:
        json.dump(net.to_dict(), fh, indent=2)
