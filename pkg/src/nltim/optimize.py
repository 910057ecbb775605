"""Influence maximization under a transient/permanent budget.

For each split ``k`` transient / ``k_hat = floor((K - k c) / c_hat)`` permanent
seeds, a greedy pass runs over the partition matroid
``{(A, A_hat): |A| <= k, |A_hat| <= k_hat, A and A_hat disjoint}`` and the best
split wins.  On acyclic networks the objective is monotone submodular, so the
greedy result is within a factor 1/2 of the optimum.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .diffusion import SeedSets, sample_stderr, simulate_batch, threshold_matrix
from .errors import CandidateAlreadySeeded, SearchBudgetExceeded
from .exact import (
    DEFAULT_CELL_BUDGET,
    exact_influence_cells,
    permanent_gain_table,
    transient_gain_table,
    walk_table,
)
from .network import InfoNetwork, require_acyclic

TRANSIENT = "transient"
PERMANENT = "permanent"
ROLES = (PERMANENT, TRANSIENT)
TIE_TOL = 1e-12
METHODS = ("exact-dag", "cells", "mc")


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class Budget:
    K: Fraction
    c: Fraction
    c_hat: Fraction

    def __init__(self, K, c=1, c_hat=1):
        object.__setattr__(self, "K", _frac(K))
        object.__setattr__(self, "c", _frac(c))
        object.__setattr__(self, "c_hat", _frac(c_hat))
        if self.K < 0 or self.c <= 0 or self.c_hat <= 0:
            raise ValueError("budget needs K >= 0 and positive costs")

    def splits(self, n: int | None = None) -> list[tuple[int, int]]:
        """All ``(k, k_hat)`` pairs with ``k_hat`` maximal for its ``k``."""
        out = []
        for k in range(math.floor(self.K / self.c) + 1):
            k_hat = math.floor((self.K - k * self.c) / self.c_hat)
            if n is not None:
                k, k_hat = min(k, n), min(k_hat, n)
            if (k, k_hat) not in out:
                out.append((k, k_hat))
        return out

    def feasible(self, seeds: SeedSets) -> bool:
        return self.c * len(seeds.transient) + self.c_hat * len(seeds.permanent) <= self.K


# -- evaluators --------------------------------------------------------------------


class Evaluator:
    """Expected-influence oracle with an evaluation counter."""

    name = ""

    def __init__(self, net: InfoNetwork, horizon: int):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.net = net
        self.horizon = horizon
        self.evaluations = 0

    def _value(self, seeds: SeedSets) -> float:
        raise NotImplementedError

    def value(self, seeds: SeedSets) -> float:
        self.evaluations += 1
        return self._value(seeds)

    def gain(self, seeds: SeedSets, node: int, role: str) -> float:
        if node in seeds.all:
            raise CandidateAlreadySeeded(f"node {self.net.labels[node]!r} is already seeded")
        self.evaluations += 1
        return self._value(seeds.add(node, role)) - self._value(seeds)


class ExactDagEvaluator(Evaluator):
    name = "exact-dag"

    def __init__(self, net, horizon):
        require_acyclic(net)
        super().__init__(net, horizon)

    def _value(self, seeds):
        q = walk_table(self.net, seeds, self.horizon)
        return float(q[1:, self.net.counted].sum()) / self.horizon

    def gain(self, seeds, node, role):
        if node in seeds.all:
            raise CandidateAlreadySeeded(f"node {self.net.labels[node]!r} is already seeded")
        self.evaluations += 1
        table = permanent_gain_table if role == PERMANENT else transient_gain_table
        g = table(self.net, seeds, node, self.horizon)
        return float(g[1:, self.net.counted].sum()) / self.horizon


class CellsEvaluator(Evaluator):
    name = "cells"

    def __init__(self, net, horizon, cell_budget=DEFAULT_CELL_BUDGET, threads=1):
        super().__init__(net, horizon)
        self.cell_budget = cell_budget
        self.threads = threads

    def _value(self, seeds):
        return exact_influence_cells(self.net, seeds, self.horizon, self.cell_budget, self.threads)


class MonteCarloEvaluator(Evaluator):
    """Sample average over a fixed set of threshold draws (common random numbers)."""

    name = "monte-carlo"

    def __init__(self, net, horizon, samples=10000, seed=0, threads=1):
        super().__init__(net, horizon)
        self.samples = samples
        self.seed = seed
        self.theta = threshold_matrix(net, seed, 0, samples)

    def sample_values(self, seeds: SeedSets) -> np.ndarray:
        init = np.zeros(self.net.size, dtype=bool)
        init[list(seeds.transient)] = True
        perm = np.zeros(self.net.size, dtype=bool)
        perm[list(seeds.permanent)] = True
        X = simulate_batch(self.net, self.theta, init, perm, self.horizon)
        return X[:, 1:, :][:, :, self.net.counted].sum(axis=(1, 2)) / self.horizon

    def _value(self, seeds):
        return math.fsum(self.sample_values(seeds).tolist()) / self.samples

    def stderr(self, seeds: SeedSets) -> float:
        return sample_stderr(self.sample_values(seeds))


def make_evaluator(net, horizon, method="exact-dag", samples=10000, seed=0, threads=1) -> Evaluator:
    if method == "exact-dag":
        return ExactDagEvaluator(net, horizon)
    if method == "cells":
        return CellsEvaluator(net, horizon, threads=threads)
    if method in ("mc", "monte-carlo"):
        return MonteCarloEvaluator(net, horizon, samples, seed, threads)
    raise ValueError(f"unknown evaluator {method!r}; choose from {METHODS}")


def marginal_gain(net, seeds: SeedSets, candidate: tuple[int, str], horizon: int, evaluator: Evaluator | str = "exact-dag") -> float:
    if isinstance(evaluator, str):
        evaluator = make_evaluator(net, horizon, evaluator)
    node, role = candidate
    return evaluator.gain(seeds, node, role)


# -- greedy -------------------------------------------------------------------------


@dataclass
class Solution:
    seeds: SeedSets
    value: float
    evaluator: str
    evaluations: int
    k: int = 0
    k_hat: int = 0
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self, net: InfoNetwork) -> dict:
        lab = self.seeds.labels(net)
        return {
            "k": self.k,
            "k_hat": self.k_hat,
            "transient": lab["transient"],
            "permanent": lab["permanent"],
            "value": self.value,
            "evaluator": self.evaluator,
            "evaluations": self.evaluations,
        }


def _key(net: InfoNetwork, node: int, role: str):
    return (ROLES.index(role), net.labels[node], node)


def _pick(net, scored):
    """Eager selection rule over ``(gain, node, role)`` triples."""
    best = max(g for g, _, _ in scored)
    tied = [(n, r) for g, n, r in scored if g >= best - TIE_TOL]
    node, role = min(tied, key=lambda e: _key(net, *e))
    return best, node, role


def _elements(net, seeds, caps):
    return [
        (v, role)
        for role in ROLES
        if _count(seeds, role) < caps[role]
        for v in net.nodes
        if v not in seeds.all
    ]


def _count(seeds, role):
    return len(seeds.permanent) if role == PERMANENT else len(seeds.transient)


def _greedy_eager(net, ev, caps):
    seeds = SeedSets()
    trace = []
    while True:
        elems = _elements(net, seeds, caps)
        if not elems:
            break
        scored = [(ev.gain(seeds, v, r), v, r) for v, r in elems]
        g, v, r = _pick(net, scored)
        if g <= TIE_TOL:
            break
        seeds = seeds.add(v, r)
        trace.append((net.labels[v], r, g))
    return seeds, trace


def _greedy_lazy(net, ev, caps):
    seeds = SeedSets()
    trace = []
    heap = []
    stamp = 0
    for v, r in _elements(net, seeds, caps):
        heapq.heappush(heap, (-ev.gain(seeds, v, r), _key(net, v, r), v, r, stamp))

    def feasible(v, r):
        return v not in seeds.all and _count(seeds, r) < caps[r]

    while heap:
        # bring a fresh entry to the top
        while heap:
            negb, key, v, r, st = heap[0]
            if not feasible(v, r):
                heapq.heappop(heap)
                continue
            if st == stamp:
                break
            heapq.heapreplace(heap, (-ev.gain(seeds, v, r), key, v, r, stamp))
        if not heap:
            break
        top = -heap[0][0]
        # refresh every entry whose bound could tie with the top, then apply the eager rule
        pool = []
        while heap and -heap[0][0] >= top - TIE_TOL:
            negb, key, v, r, st = heapq.heappop(heap)
            if not feasible(v, r):
                continue
            g = -negb if st == stamp else ev.gain(seeds, v, r)
            pool.append((g, v, r))
        g, v, r = _pick(net, pool)
        for gg, vv, rr in pool:
            if (vv, rr) != (v, r):
                heapq.heappush(heap, (-gg, _key(net, vv, rr), vv, rr, stamp))
        if g <= TIE_TOL:
            break
        seeds = seeds.add(v, r)
        trace.append((net.labels[v], r, g))
        stamp += 1
    return seeds, trace


def greedy_max(net: InfoNetwork, budget: Budget, horizon: int, evaluator: Evaluator | str = "exact-dag", lazy: bool = False) -> Solution:
    if isinstance(evaluator, str):
        evaluator = make_evaluator(net, horizon, evaluator)
    start = evaluator.evaluations
    best = None
    for k, k_hat in budget.splits(n=len(net.nodes)):
        caps = {TRANSIENT: k, PERMANENT: k_hat}
        run = _greedy_lazy if lazy else _greedy_eager
        seeds, trace = run(net, evaluator, caps)
        value = evaluator.value(seeds)
        if best is None or value > best.value:
            best = Solution(seeds, value, evaluator.name, 0, k, k_hat, trace)
    best.evaluations = evaluator.evaluations - start
    return best


def feasible_pairs(net: InfoNetwork, budget: Budget):
    """Yield every disjoint (A, A_hat) within budget."""
    nodes = list(net.nodes)
    n = len(nodes)
    for a in range(min(n, math.floor(budget.K / budget.c)) + 1):
        max_ah = min(n - a, math.floor((budget.K - a * budget.c) / budget.c_hat))
        for A in itertools.combinations(nodes, a):
            rest = [v for v in nodes if v not in A]
            for ah in range(max_ah + 1):
                for Ah in itertools.combinations(rest, ah):
                    yield SeedSets(A, Ah)


def count_feasible_pairs(net: InfoNetwork, budget: Budget) -> int:
    n = len(net.nodes)
    total = 0
    for a in range(min(n, math.floor(budget.K / budget.c)) + 1):
        max_ah = min(n - a, math.floor((budget.K - a * budget.c) / budget.c_hat))
        total += math.comb(n, a) * sum(math.comb(n - a, ah) for ah in range(max_ah + 1))
    return total


def brute_force_opt(net: InfoNetwork, budget: Budget, horizon: int, evaluator: Evaluator | str = "exact-dag", limit: int = 10**6) -> Solution:
    if isinstance(evaluator, str):
        evaluator = make_evaluator(net, horizon, evaluator)
    total = count_feasible_pairs(net, budget)
    if total > limit:
        raise SearchBudgetExceeded(f"{total} feasible seed pairs exceed the limit of {limit}")
    start = evaluator.evaluations
    best, best_key = None, None
    for seeds in feasible_pairs(net, budget):
        value = evaluator.value(seeds)
        lab = seeds.labels(net)
        key = (lab["transient"], lab["permanent"])
        if best is None or value > best.value + TIE_TOL or (abs(value - best.value) <= TIE_TOL and key < best_key):
            best, best_key = Solution(seeds, value, evaluator.name, 0, len(seeds.transient), len(seeds.permanent)), key
    best.evaluations = evaluator.evaluations - start
    return best
