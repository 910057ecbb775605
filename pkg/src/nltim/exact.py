"""Exact expected influence.

Two independent routes:

* On acyclic networks, ``E[X_v^t]`` equals the probability that a random walk
  from ``v`` (step ``v -> u`` with probability ``b_vu``) sits in the transient
  seed set at time ``t`` or has passed through a permanent seed by then.  A
  backward dynamic program over ``t`` gives all ``(t, v)`` entries at once.
* On any network, the trajectory depends on ``theta_v`` only through
  comparisons with the finitely many activation levels ``v`` can see, so
  threshold space splits into boxes on which the run is constant.  Summing one
  run per box, weighted by its volume, gives the exact expectation.
"""
from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .diffusion import SeedSets, simulate_batch
from .errors import CellBudgetExceeded
from .network import InfoNetwork, require_acyclic

LEVEL_TOL = 1e-12
CELL_CHUNK = 4096
DEFAULT_CELL_BUDGET = 10**7


def _indicator(net: InfoNetwork, nodes) -> np.ndarray:
    x = np.zeros(net.size)
    x[list(nodes)] = 1.0
    return x


def reach_prob(net: InfoNetwork, source: int, target, t: int) -> float:
    """Pr[the t-step walk from ``source`` is in ``target`` at exactly time t]."""
    if t < 0:
        raise ValueError("t must be >= 0")
    r = _indicator(net, target)
    for _ in range(t):
        r = net.weights @ r
    return float(r[source])


def pass_prob(net: InfoNetwork, source: int, target, t: int) -> float:
    """Pr[the walk from ``source`` visits ``target`` at some time <= t]."""
    if t < 0:
        raise ValueError("t must be >= 0")
    hit = _indicator(net, target).astype(bool)
    r = hit.astype(float)
    for _ in range(t):
        r = np.where(hit, 1.0, net.weights @ r)
    return float(r[source])


def walk_distribution(net: InfoNetwork, source: int, t: int) -> np.ndarray:
    """Forward occupancy distribution of the walk after ``t`` steps."""
    p = np.zeros(net.size)
    p[source] = 1.0
    for _ in range(t):
        p = p @ net.weights
    return p


@dataclass(frozen=True, eq=False)
class ReachTable:
    """``q[t, v] = Pr[R_v^t(A) or S_v^t(A_hat)]``, which is ``E[X_v^t]`` on acyclic networks."""

    q: np.ndarray
    net: InfoNetwork

    @property
    def horizon(self) -> int:
        return self.q.shape[0] - 1

    def influence(self) -> float:
        return float(self.q[1:, self.net.counted].sum()) / self.horizon

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = list(self.net.nodes)
        buf.write(",".join(["t"] + [self.net.labels[v] for v in cols]) + "\n")
        for t in range(self.horizon + 1):
            buf.write(",".join([str(t)] + ["%.17g" % x for x in self.q[t, cols]]) + "\n")
        return buf.getvalue()


def walk_table(net: InfoNetwork, seeds: SeedSets, horizon: int) -> np.ndarray:
    """Reach/pass-through probabilities for every (t, v); no acyclicity check."""
    perm = np.zeros(net.size, dtype=bool)
    perm[list(seeds.permanent)] = True
    q = np.empty((horizon + 1, net.size))
    q[0] = _indicator(net, seeds.all)
    for t in range(1, horizon + 1):
        q[t] = net.weights @ q[t - 1]
        q[t, perm] = 1.0
    return q


def expected_indicator_dag(net: InfoNetwork, seeds: SeedSets, horizon: int) -> ReachTable:
    require_acyclic(net)
    seeds.validate(net)
    return ReachTable(walk_table(net, seeds, horizon), net)


def expected_influence_dag(net: InfoNetwork, seeds: SeedSets, horizon: int) -> float:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    return expected_indicator_dag(net, seeds, horizon).influence()


def transient_gain_table(net: InfoNetwork, seeds: SeedSets, w: int, horizon: int) -> np.ndarray:
    """Pr[R_v^t({w}) and not S_v^t(A_hat)]: the gain table of adding ``w`` as transient."""
    perm = list(seeds.permanent)
    r = np.empty((horizon + 1, net.size))
    r[0] = _indicator(net, [w])
    r[0, perm] = 0.0
    for t in range(1, horizon + 1):
        r[t] = net.weights @ r[t - 1]
        r[t, perm] = 0.0
    return r


def permanent_gain_table(net: InfoNetwork, seeds: SeedSets, w: int, horizon: int) -> np.ndarray:
    """Pr[S_v^t({w}) minus (R_v^t(A) or S_v^t(A_hat))]: the gain of adding ``w`` as permanent.

    A walk standing on ``w`` with ``s`` steps left contributes exactly when the
    remaining walk avoids the current seeds' event, i.e. ``1 - q[s, w]``.
    """
    q = walk_table(net, seeds, horizon)
    perm = list(seeds.permanent)
    g = np.empty((horizon + 1, net.size))
    g[0] = _indicator(net, [w])
    for t in range(1, horizon + 1):
        g[t] = net.weights @ g[t - 1]
        g[t, perm] = 0.0
        g[t, w] = 1.0 - q[t, w]
    return g


# -- cell enumeration oracle -------------------------------------------------------


@dataclass(frozen=True)
class CellPartition:
    """Per-node threshold intervals; the run is constant on each product of intervals."""

    levels: tuple[np.ndarray, ...]
    lengths: tuple[np.ndarray, ...]
    midpoints: tuple[np.ndarray, ...]

    @property
    def n_cells(self) -> int:
        n = 1
        for ln in self.lengths:
            n *= len(ln)
        return n


def _subset_sums(weights: list[float]) -> np.ndarray:
    sums = {0.0}
    for w in weights:
        sums |= {s + w for s in sums}
    vals = np.sort(np.fromiter(sums, float))
    keep = [vals[0]]
    for x in vals[1:]:
        if x - keep[-1] > LEVEL_TOL:
            keep.append(x)
    return np.array(keep)


def cell_partition(net: InfoNetwork, permanent=frozenset()) -> CellPartition:
    levels, lengths, mids = [], [], []
    for v in range(net.size):
        ws = [w for u, w in net.out_neighbors(v) if u != net.void]
        if v == net.void or v in permanent or not ws:
            levels.append(np.array([0.0]))
            lengths.append(np.array([1.0]))
            mids.append(np.array([0.5]))
            continue
        lv = _subset_sums(ws)
        inner = lv[(lv > LEVEL_TOL) & (lv < 1.0 - LEVEL_TOL)]
        bounds = np.concatenate([[0.0], inner, [1.0]])
        levels.append(lv)
        lengths.append(np.diff(bounds))
        mids.append((bounds[:-1] + bounds[1:]) / 2)
    return CellPartition(tuple(levels), tuple(lengths), tuple(mids))


def expected_indicator_cells(
    net: InfoNetwork,
    seeds: SeedSets,
    horizon: int,
    cell_budget: int = DEFAULT_CELL_BUDGET,
    threads: int = 1,
) -> np.ndarray:
    """Exact ``E[X_v^t]`` for every (t, v) by enumerating threshold cells."""
    seeds.validate(net)
    part = cell_partition(net, seeds.permanent)
    total = part.n_cells
    if total > cell_budget:
        raise CellBudgetExceeded(f"{total} cells exceed the budget of {cell_budget}")
    init = np.zeros(net.size, dtype=bool)
    init[list(seeds.transient)] = True
    perm = np.zeros(net.size, dtype=bool)
    perm[list(seeds.permanent)] = True

    varying = [v for v in range(net.size) if len(part.lengths[v]) > 1]
    radix = [len(part.lengths[v]) for v in varying]
    strides = np.cumprod([1] + radix[:-1]).astype(np.int64) if varying else np.array([], np.int64)
    base_theta = np.array([m[0] for m in part.midpoints])
    base_theta[net.void] = np.inf

    def work(start, count):
        idx = np.arange(start, start + count, dtype=np.int64)
        theta = np.tile(base_theta, (count, 1))
        weight = np.ones(count)
        for v, r, s in zip(varying, radix, strides):
            d = (idx // s) % r
            theta[:, v] = part.midpoints[v][d]
            weight *= part.lengths[v][d]
        X = simulate_batch(net, theta, init, perm, horizon)
        return np.einsum("s,stn->tn", weight, X.astype(np.float64))

    chunks = [(s, min(CELL_CHUNK, total - s)) for s in range(0, total, CELL_CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda sc: work(*sc), chunks))
    else:
        parts = [work(s, c) for s, c in chunks]
    out = np.zeros((horizon + 1, net.size))
    for p in parts:
        out += p
    return out


def exact_influence_cells(
    net: InfoNetwork,
    seeds: SeedSets,
    horizon: int,
    cell_budget: int = DEFAULT_CELL_BUDGET,
    threads: int = 1,
) -> float:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    q = expected_indicator_cells(net, seeds, horizon, cell_budget, threads)
    return float(q[1:, net.counted].sum()) / horizon

