"""Non-progressive linear threshold dynamics and Monte-Carlo estimation.

Thresholds come from numpy's Philox-4x64-10 counter-based generator keyed by
the user seed.  Sample ``i`` of a network with ``N`` slots (void included)
reads counter blocks ``[i*B, (i+1)*B)`` with ``B = ceil(N / 4)``; each 64-bit
word ``x`` maps to ``((x >> 11) + 0.5) * 2**-53``, which lies strictly inside
(0, 1).  Because a sample's thresholds depend only on ``(seed, i)``, chunked or
threaded evaluation reproduces a serial run bit for bit.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InvalidSeeds, MissingThreshold
from .network import InfoNetwork

CHUNK = 1024
_PATH_STREAM = 1 << 64


@dataclass(frozen=True)
class SeedSets:
    transient: frozenset[int] = frozenset()
    permanent: frozenset[int] = frozenset()

    def __post_init__(self):
        perm = frozenset(int(v) for v in self.permanent)
        object.__setattr__(self, "permanent", perm)
        object.__setattr__(self, "transient", frozenset(int(v) for v in self.transient) - perm)

    @classmethod
    def from_labels(cls, net: InfoNetwork, transient=(), permanent=()) -> "SeedSets":
        def resolve(labels):
            out = set()
            for lab in labels:
                if lab not in net.index:
                    raise InvalidSeeds(f"unknown seed label {lab!r}")
                if net.index[lab] == net.void:
                    raise InvalidSeeds("the void node cannot be seeded")
                out.add(net.index[lab])
            return out

        return cls(resolve(transient), resolve(permanent))

    def validate(self, net: InfoNetwork) -> "SeedSets":
        for v in self.transient | self.permanent:
            if not 0 <= v < net.void:
                raise InvalidSeeds(f"seed index {v} is not a non-void node")
        return self

    def add(self, node: int, role: str) -> "SeedSets":
        if role == "permanent":
            return SeedSets(self.transient, self.permanent | {node})
        return SeedSets(self.transient | {node}, self.permanent)

    @property
    def all(self) -> frozenset[int]:
        return self.transient | self.permanent

    def __len__(self):
        return len(self.transient) + len(self.permanent)

    def labels(self, net: InfoNetwork) -> dict[str, list[str]]:
        return {
            "transient": sorted(net.labels[v] for v in self.transient),
            "permanent": sorted(net.labels[v] for v in self.permanent),
        }


def _mask(net: InfoNetwork, nodes: Iterable[int]) -> np.ndarray:
    m = np.zeros(net.size, dtype=bool)
    m[list(nodes)] = True
    return m


# -- thresholds ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ThresholdConfig:
    """One threshold per node; the void slot holds +inf so it never activates."""

    values: np.ndarray

    def check(self, net: InfoNetwork) -> np.ndarray:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (net.size,):
            raise MissingThreshold(f"expected {net.size} thresholds, got shape {v.shape}")
        body = v[: net.void]
        if np.isnan(body).any():
            missing = [net.labels[i] for i in np.flatnonzero(np.isnan(body))]
            raise MissingThreshold(f"no threshold for {missing}")
        return v


def _uniform_block(n_slots: int, seed: int, start: int, count: int, levels: int | None = None) -> np.ndarray:
    blocks = -(-n_slots // 4)
    bitgen = np.random.Philox(key=seed)
    if start:
        bitgen.advance(start * blocks)
    raw = bitgen.random_raw(count * blocks * 4).reshape(count, blocks * 4)[:, :n_slots]
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    if levels is not None:
        # discretized thresholds on {1/L, ..., L/L}; used only for mutation testing
        u = np.ceil(u * levels) / levels
    return u


def threshold_matrix(net: InfoNetwork, seed: int, start: int, count: int, levels: int | None = None) -> np.ndarray:
    theta = _uniform_block(net.size, seed, start, count, levels)
    theta[:, net.void] = np.inf
    return theta


def sample_thresholds(net: InfoNetwork, seed: int, index: int = 0, levels: int | None = None) -> ThresholdConfig:
    """Thresholds of Monte-Carlo sample ``index`` under ``seed``."""
    return ThresholdConfig(threshold_matrix(net, seed, index, 1, levels)[0])


# -- the NLT process -------------------------------------------------------------


def _activation(W: np.ndarray, active: np.ndarray) -> np.ndarray:
    return active.astype(np.float64) @ W.T


def simulate_batch(
    net: InfoNetwork,
    theta: np.ndarray,
    initial: np.ndarray,
    permanent: np.ndarray,
    horizon: int,
    strict: bool = False,
) -> np.ndarray:
    """Run the process for every row of ``theta``; returns bool array (S, T+1, N).

    ``strict=True`` replaces the ``>=`` activation rule by ``>``; it exists only
    so the verification harness can be tested against a broken rule.
    """
    W = net.weights
    S = theta.shape[0]
    out = np.empty((S, horizon + 1, net.size), dtype=bool)
    cur = np.broadcast_to(initial | permanent, (S, net.size)).copy()
    out[:, 0] = cur
    for t in range(1, horizon + 1):
        f = _activation(W, cur)
        cur = (f > theta) if strict else (f >= theta)
        cur |= permanent
        cur[:, net.void] = False
        out[:, t] = cur
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    active: np.ndarray  # (T+1, N) bool
    net: InfoNetwork

    @property
    def horizon(self) -> int:
        return self.active.shape[0] - 1

    def at(self, t: int) -> frozenset[int]:
        return frozenset(int(v) for v in np.flatnonzero(self.active[t]))

    def restrict(self, nodes: Iterable[int]) -> np.ndarray:
        """States of ``nodes`` over time (rows t = 0..T)."""
        return self.active[:, list(nodes)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = list(self.net.nodes)
        writer.writerow(["t"] + [self.net.labels[v] for v in cols])
        for t in range(self.horizon + 1):
            writer.writerow([t] + [int(x) for x in self.active[t, cols]])
        return buf.getvalue()


def step_nlt(net: InfoNetwork, permanent: Iterable[int], prev: Iterable[int], theta: ThresholdConfig) -> frozenset[int]:
    th = theta.check(net)
    perm = _mask(net, permanent)
    cur = _mask(net, prev)
    f = _activation(net.weights, cur)
    nxt = (f >= th) | perm
    nxt[net.void] = False
    return frozenset(int(v) for v in np.flatnonzero(nxt))


def run_nlt(net: InfoNetwork, seeds: SeedSets, theta: ThresholdConfig, horizon: int) -> Trajectory:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    th = theta.check(net)
    seeds.validate(net)
    X = simulate_batch(
        net, th[None, :], _mask(net, seeds.transient), _mask(net, seeds.permanent), horizon
    )
    return Trajectory(X[0], net)


def influence(traj: Trajectory) -> float:
    """Average number of active counted nodes over t = 1..T."""
    counts = traj.active[1:, traj.net.counted].sum(axis=1)
    return float(counts.sum()) / traj.horizon


# -- Monte Carlo -------------------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "samples": self.samples, "seed": self.seed}


def _chunks(samples: int):
    return [(s, min(CHUNK, samples - s)) for s in range(0, samples, CHUNK)]


def _map_chunks(fn, samples: int, threads: int):
    chunks = _chunks(samples)
    if threads <= 1 or len(chunks) == 1:
        return [fn(s, c) for s, c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda sc: fn(*sc), chunks))


def influence_samples(
    net: InfoNetwork,
    seeds: SeedSets,
    horizon: int,
    samples: int,
    seed: int,
    threads: int = 1,
    levels: int | None = None,
    strict: bool = False,
) -> np.ndarray:
    """Per-sample influence values, in sample-index order."""
    init, perm = _mask(net, seeds.transient), _mask(net, seeds.permanent)

    def work(start, count):
        theta = threshold_matrix(net, seed, start, count, levels)
        X = simulate_batch(net, theta, init, perm, horizon, strict)
        return X[:, 1:, :][:, :, net.counted].sum(axis=(1, 2)) / horizon

    return np.concatenate(_map_chunks(work, samples, threads))


def _summarize(values: np.ndarray, samples: int, seed: int) -> MonteCarloEstimate:
    mean = math.fsum(values.tolist()) / samples
    return MonteCarloEstimate(mean, sample_stderr(values), samples, seed)


def sample_stderr(values: np.ndarray) -> float:
    """Sample standard deviation over sqrt(n); exactly 0 when all values agree."""
    if len(values) < 2 or np.ptp(values) == 0:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def monte_carlo_influence(
    net: InfoNetwork,
    seeds: SeedSets,
    horizon: int,
    samples: int,
    seed: int,
    threads: int = 1,
) -> MonteCarloEstimate:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    seeds.validate(net)
    if not seeds.all:
        return MonteCarloEstimate(0.0, 0.0, samples, seed)
    return _summarize(influence_samples(net, seeds, horizon, samples, seed, threads), samples, seed)


def monte_carlo_indicators(
    net: InfoNetwork,
    seeds: SeedSets,
    horizon: int,
    samples: int,
    seed: int,
    threads: int = 1,
    levels: int | None = None,
    strict: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical Pr[X_v^t = 1] and its standard error, each of shape (T+1, N)."""
    init, perm = _mask(net, seeds.transient), _mask(net, seeds.permanent)

    def work(start, count):
        theta = threshold_matrix(net, seed, start, count, levels)
        return simulate_batch(net, theta, init, perm, horizon, strict).sum(axis=0, dtype=np.int64)

    hits = np.sum(_map_chunks(work, samples, threads), axis=0)
    return _bernoulli_stats(hits, samples)


def _bernoulli_stats(hits: np.ndarray, samples: int):
    p = hits / samples
    if samples > 1:
        se = np.sqrt(p * (1 - p) / (samples - 1))
    else:
        se = np.zeros_like(p)
    return p, se


# -- the Path-Effect process ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InfluencePaths:
    """Parent pointers of the influence paths; ``parents[0]`` is the identity."""

    parents: np.ndarray  # (T+1, N) int
    origins: np.ndarray  # (T+1, N) int, origins[t, v] = P_v^t[0]

    def path(self, v: int, t: int) -> list[int]:
        """P_v^t: entry s >= 1 is the parent chosen at step s; entry 0 is the origin."""
        chain = []
        node = v
        for s in range(t, 0, -1):
            node = int(self.parents[s, node])
            chain.append(node)
        chain.reverse()
        return [chain[0]] + chain if t else [v]


def path_effect_batch(
    net: InfoNetwork,
    theta: np.ndarray,
    transient: np.ndarray,
    horizon: int,
    uniforms: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Path-Effect process over rows of ``theta``.

    ``uniforms`` has shape (S, T, N) and drives the parent choices.  Returns
    ``(parents, origins)``, both int arrays of shape (S, T+1, N).
    """
    W = net.weights
    S, N = theta.shape[0], net.size
    void = net.void
    parents = np.empty((S, horizon + 1, N), dtype=np.int64)
    origins = np.empty((S, horizon + 1, N), dtype=np.int64)
    parents[:, 0] = np.arange(N)
    origins[:, 0] = np.arange(N)
    rows = np.arange(S)
    for t in range(1, horizon + 1):
        prev_active = transient[origins[:, t - 1]]
        act = _activation(W, prev_active) >= theta
        for v in range(N):
            if v == void:
                parents[:, t, v] = void
                continue
            side = prev_active == act[:, v : v + 1]
            cum = np.cumsum(W[v] * side, axis=1)
            total = cum[:, -1]
            r = uniforms[:, t - 1, v] * total
            choice = np.argmax(cum > r[:, None], axis=1)
            # no inactive out-neighbor left only happens through float rounding of f ~ 1
            choice[total <= 0] = void
            parents[:, t, v] = choice
        origins[:, t] = origins[rows[:, None], t - 1, parents[:, t]]
    return parents, origins


def run_path_effect(
    net: InfoNetwork,
    transient: Iterable[int],
    theta: ThresholdConfig,
    horizon: int,
    seed: int,
) -> tuple[Trajectory, InfluencePaths]:
    """Path-Effect run; ``seed`` drives only the parent choices, not the thresholds."""
    th = theta.check(net)
    a = _mask(net, transient)
    a[net.void] = False
    u = np.random.Generator(np.random.Philox(key=_PATH_STREAM | seed)).random((1, horizon, net.size))
    parents, origins = path_effect_batch(net, th[None, :], a, horizon, u)
    traj = Trajectory(a[origins[0]], net)
    return traj, InfluencePaths(parents[0], origins[0])


def monte_carlo_source_events(
    net: InfoNetwork,
    transient: Iterable[int],
    target: Iterable[int],
    horizon: int,
    samples: int,
    seed: int,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical Pr[P_v^t[0] in target] under a Path-Effect run seeded with ``transient``."""
    a = _mask(net, transient)
    a[net.void] = False
    c = _mask(net, target)

    def work(start, count):
        theta = threshold_matrix(net, seed, start, count)
        u = _uniform_block(horizon * net.size, _PATH_STREAM | seed, start, count).reshape(count, horizon, net.size)
        _, origins = path_effect_batch(net, theta, a, horizon, u)
        return c[origins].sum(axis=0, dtype=np.int64)

    hits = np.sum(_map_chunks(work, samples, threads), axis=0)
    return _bernoulli_stats(hits, samples)
