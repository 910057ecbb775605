"""Executable checks of the model's structural properties."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .diffusion import (
    SeedSets,
    ThresholdConfig,
    monte_carlo_indicators,
    monte_carlo_source_events,
    run_path_effect,
    simulate_batch,
    threshold_matrix,
)
from .errors import NotFound, SearchBudgetExceeded
from .exact import expected_indicator_cells, expected_influence_dag, reach_prob, walk_table
from .generators import random_dag, random_network
from .network import InfoNetwork, amplify, network_from_dict, transform_permanent, vertex_cover_reduction
from .optimize import MonteCarloEvaluator, make_evaluator

EXACT_TOL = 1e-9
MC_SIGMAS = 4.0

# node states in a submodularity sweep: (code in the smaller pair, code in the larger pair)
# code 0 = unseeded, 1 = transient, 2 = permanent
_STATES = np.array([(0, 0), (1, 1), (0, 1), (2, 2), (0, 2)])


@dataclass
class SubmodularityReport:
    instance: str
    checked: int = 0
    violations: list = field(default_factory=list)
    n_violations: int = 0
    max_violation: float = 0.0
    tolerance: float = EXACT_TOL

    @property
    def ok(self) -> bool:
        return self.n_violations == 0

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "checked": self.checked,
            "n_violations": self.n_violations,
            "max_violation": self.max_violation,
            "tolerance": self.tolerance,
            "violations": self.violations,
        }


def seed_pair_values(net: InfoNetwork, horizon: int, evaluator="exact-dag", **kw):
    """Objective value (and stderr, zero for exact evaluators) of every disjoint pair.

    Index ``sum(code_v * 3**v)`` with code 0/1/2 = unseeded/transient/permanent.
    """
    n = len(net.nodes)
    ev = evaluator if not isinstance(evaluator, str) else make_evaluator(net, horizon, evaluator, **kw)
    vals = np.empty(3**n)
    errs = np.zeros(3**n)
    for code, digits in enumerate(itertools.product(range(3), repeat=n)):
        digits = digits[::-1]
        seeds = SeedSets([v for v in range(n) if digits[v] == 1], [v for v in range(n) if digits[v] == 2])
        vals[code] = ev.value(seeds)
        if isinstance(ev, MonteCarloEvaluator):
            errs[code] = ev.stderr(seeds)
    return vals, errs


def check_submodularity(
    net: InfoNetwork,
    horizon: int,
    evaluator="exact-dag",
    scope: str = "both",
    tol: float = EXACT_TOL,
    max_checks: int = 2_000_000,
    rng: np.random.Generator | None = None,
    max_records: int = 20,
    **kw,
) -> SubmodularityReport:
    """Check diminishing returns and monotonicity in both arguments.

    For every ``A <= B``, ``A_hat <= B_hat`` (B, B_hat disjoint), ``w`` outside
    both, and each role of ``w`` in ``scope``, the gain of adding ``w`` at the
    smaller pair must be at least the gain at the larger pair, and every gain
    must be non-negative.
    """
    n = len(net.nodes)
    vals, errs = seed_pair_values(net, horizon, evaluator, **kw)
    roles = {"first-arg": [1], "second-arg": [2], "both": [1, 2]}[scope]
    pow3 = 3 ** np.arange(n, dtype=np.int64)
    report = SubmodularityReport(instance=repr(net), tolerance=tol)
    configs = 5 ** (n - 1) if n else 0
    sample = configs * n > max_checks
    if sample and rng is None:
        rng = np.random.default_rng(0)
    for w in range(n):
        others = [v for v in range(n) if v != w]
        if sample:
            digits = rng.integers(0, 5, size=(max_checks // n, n - 1))
        else:
            digits = np.array(list(itertools.product(range(5), repeat=n - 1)), dtype=np.int64).reshape(-1, n - 1)
        st = _STATES[digits]  # (M, n-1, 2)
        code_small = st[:, :, 0] @ pow3[others] if others else np.zeros(len(digits), np.int64)
        code_large = st[:, :, 1] @ pow3[others] if others else np.zeros(len(digits), np.int64)
        for role in roles:
            step = role * pow3[w]
            g_small = vals[code_small + step] - vals[code_small]
            g_large = vals[code_large + step] - vals[code_large]
            if isinstance(evaluator, str) and evaluator in ("mc", "monte-carlo") or np.any(errs):
                slack = MC_SIGMAS * np.sqrt(
                    errs[code_small + step] ** 2 + errs[code_small] ** 2 + errs[code_large + step] ** 2 + errs[code_large] ** 2
                )
                mono_slack = MC_SIGMAS * np.sqrt(errs[code_small + step] ** 2 + errs[code_small] ** 2)
            else:
                slack = mono_slack = tol
            report.checked += 2 * len(digits)
            sub_bad = g_small - g_large < -slack
            mono_bad = g_small < -mono_slack
            for kind, bad, mag in (("submodularity", sub_bad, g_large - g_small), ("monotonicity", mono_bad, -g_small)):
                idx = np.flatnonzero(bad)
                report.n_violations += len(idx)
                if len(idx):
                    report.max_violation = max(report.max_violation, float(mag[idx].max()))
                for i in idx[: max(0, max_records - len(report.violations))]:
                    report.violations.append(
                        _describe(net, kind, role, w, code_small[i], code_large[i], g_small[i], g_large[i])
                    )
    return report


def _decode(net, code, n):
    a, ah = [], []
    for v in range(n):
        d = (int(code) // 3**v) % 3
        if d == 1:
            a.append(net.labels[v])
        elif d == 2:
            ah.append(net.labels[v])
    return a, ah


def _describe(net, kind, role, w, cs, cl, gs, gl):
    n = len(net.nodes)
    a, ah = _decode(net, cs, n)
    b, bh = _decode(net, cl, n)
    return {
        "kind": kind,
        "role": "transient" if role == 1 else "permanent",
        "w": net.labels[w],
        "A": a,
        "A_hat": ah,
        "B": b,
        "B_hat": bh,
        "gain_small": float(gs),
        "gain_large": float(gl),
    }


# -- counterexamples ------------------------------------------------------------------


@dataclass
class Counterexample:
    """A network, a target node and sets ``S < L`` plus ``w`` where the gain grows with the set."""

    network: dict
    target: str
    horizon: int
    small: list
    large: list
    w: str
    gaps: list  # per t = 1..T: (gain at small) - (gain at large)
    gain_small: float
    gain_large: float
    oracle: str = "cells"
    family: str = ""
    amplified: dict | None = None

    def to_dict(self) -> dict:
        d = dict(self.network)
        d["witness"] = {
            "family": self.family,
            "target": self.target,
            "horizon": self.horizon,
            "small": self.small,
            "large": self.large,
            "w": self.w,
            "gaps": self.gaps,
            "gain_small": self.gain_small,
            "gain_large": self.gain_large,
            "oracle": self.oracle,
            "amplified": self.amplified,
        }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "Counterexample":
        w = data["witness"]
        net = {"nodes": data["nodes"], "edges": data["edges"]}
        return cls(net, w["target"], w["horizon"], w["small"], w["large"], w["w"], w["gaps"],
                   w["gain_small"], w["gain_large"], w.get("oracle", "cells"), w.get("family", ""), w.get("amplified"))

    def verify(self, tol: float = EXACT_TOL) -> dict:
        """Recompute everything with the cell oracle; ``ok`` iff the violation reproduces."""
        net = network_from_dict(self.network)
        v = net.idx(self.target)
        small = [net.idx(x) for x in self.small]
        large = [net.idx(x) for x in self.large]
        w = net.idx(self.w)
        gains = _node_gains(net, v, small, large, w, self.horizon)
        gaps = (gains[0] - gains[1]).tolist()
        gs, gl = float(gains[0].mean()), float(gains[1].mean())
        reproduced = bool(np.allclose(gaps, self.gaps, atol=tol, rtol=0)) and gl - gs > tol
        out = {"ok": reproduced, "gain_small": gs, "gain_large": gl, "gaps": gaps}
        if self.amplified:
            amp = amplify(net, v, self.amplified["m"])
            h = self.amplified["horizon"]
            s_small, s_large = _objective_gains(amp, small, large, w, h)
            out["amplified_gain_small"], out["amplified_gain_large"] = s_small, s_large
            out["ok"] = out["ok"] and s_large - s_small > tol and math.isclose(
                s_small, self.amplified["gain_small"], abs_tol=tol
            ) and math.isclose(s_large, self.amplified["gain_large"], abs_tol=tol)
        return out


def _node_gains(net, v, small, large, w, horizon):
    """Per-t gains of adding ``w`` (transient) at the small and the large set, for node ``v``."""
    def ex(nodes):
        return expected_indicator_cells(net, SeedSets(nodes), horizon)[1:, v]

    g_small = ex(small + [w]) - ex(small)
    g_large = ex(large + [w]) - ex(large)
    return np.array([g_small, g_large])


def _objective_gains(net, small, large, w, horizon):
    def sig(nodes):
        q = expected_indicator_cells(net, SeedSets(nodes), horizon)
        return float(q[1:, net.counted].sum()) / horizon

    return sig(small + [w]) - sig(small), sig(large + [w]) - sig(large)


def _self_loop_network(rng, n, grid):
    """Acyclic network plus exactly one self-loop on a non-void node."""
    for _ in range(100):
        base = random_dag(rng, n, grid=grid)
        d = base.to_dict()
        v = d["nodes"][int(rng.integers(n))]
        used = sum(e["weight"] for e in d["edges"] if e["src"] == v)
        units = int(round((1 - used) / grid))
        if units < 1:
            continue
        d["edges"].append({"src": v, "dst": v, "weight": round(int(rng.integers(1, units + 1)) * grid, 12)})
        return network_from_dict(d)
    return None


def _has_self_loop(net):
    return any(net.weights[v, v] > 0 for v in net.nodes)


def _family_network(family, rng, n, grid):
    if family == "self-loop-only":
        return _self_loop_network(rng, n, grid)
    if family == "general-cycles":
        net = random_network(rng, n, grid=grid, edge_prob=0.5)
        return net if not net.acyclic and not _has_self_loop(net) else None
    if family == "acyclic":
        return random_dag(rng, n, grid=grid)
    raise ValueError(f"unknown family {family!r}")


def _best_violation(f: np.ndarray, n: int, tol: float):
    """Largest violation of diminishing returns for a set function on bitmasks."""
    full = 1 << n
    best = None
    masks = np.arange(full)
    for w in range(n):
        bit = 1 << w
        without = masks[(masks & bit) == 0]
        gain = f[without | bit] - f[without]
        # pairs S strictly inside L, both without w
        for j, L in enumerate(without):
            subs = without[((without & ~L) == 0) & (without != L)]
            if not len(subs):
                continue
            gl = gain[j]
            gs = gain[np.searchsorted(without, subs)]
            k = int(np.argmin(gs))
            diff = gl - gs[k]
            if diff > tol and (best is None or diff > best[0] + 1e-15):
                best = (float(diff), int(subs[k]), int(L), w)
    return best


def search_counterexample(
    family: str = "general-cycles",
    max_n: int = 5,
    horizons=(2, 3, 4, 5, 6, 8),
    seed: int = 0,
    tries_per_n: int = 400,
    grid: float = 0.1,
    min_n: int = 2,
    tol: float = EXACT_TOL,
    amplify_witness: bool = True,
) -> Counterexample:
    """Search small networks of ``family`` for a node whose time-averaged activation is not submodular.

    Networks are sampled in order of increasing size from a seeded generator
    with weights on a ``grid``; the first witness found is returned, made
    exact by the cell oracle and lifted to the full objective by amplifying
    the target node.
    """
    if max_n > 8:
        raise ValueError("max_n must be <= 8 for the cell oracle")
    rng = np.random.default_rng(seed)
    horizons = sorted(horizons)
    for n in range(min_n, max_n + 1):
        for _ in range(tries_per_n):
            net = _family_network(family, rng, n, grid)
            if net is None:
                continue
            tables = np.stack([
                expected_indicator_cells(net, SeedSets([v for v in range(n) if m >> v & 1]), horizons[-1])
                for m in range(1 << n)
            ])
            for v in net.nodes:
                for T in horizons:
                    f = tables[:, 1 : T + 1, v].mean(axis=1)
                    hit = _best_violation(f, n, tol)
                    if hit:
                        return _certify(net, family, v, T, hit, tol, amplify_witness)
    raise NotFound(f"no counterexample in family {family!r} up to n={max_n}")


def _bits(mask, n):
    return [v for v in range(n) if mask >> v & 1]


def _certify(net, family, v, T, hit, tol, amplify_witness):
    _, s_mask, l_mask, w = hit
    n = len(net.nodes)
    small, large = _bits(s_mask, n), _bits(l_mask, n)
    gains = _node_gains(net, v, small, large, w, T)
    lab = net.labels
    cx = Counterexample(
        network=net.to_dict(),
        target=lab[v],
        horizon=T,
        small=[lab[x] for x in small],
        large=[lab[x] for x in large],
        w=lab[w],
        gaps=(gains[0] - gains[1]).tolist(),
        gain_small=float(gains[0].mean()),
        gain_large=float(gains[1].mean()),
        family=family,
    )
    if amplify_witness:
        cx.amplified = _amplify(net, v, small, large, w, T, tol)
    return cx


def _amplify(net, v, small, large, w, T, tol):
    """Attach enough leaves to ``v`` that the whole objective over [1, T+1] violates submodularity.

    A leaf copies ``v`` one step late, so over [1, T+1] it contributes
    ``[v in A] + sum_{t=1..T} E[X_v^t]``; the first term is modular.
    """
    h = T + 1
    o_small, o_large = _objective_gains(net, small, large, w, h)
    g = _node_gains(net, v, small, large, w, T)
    node_deficit = float(np.sum(g[1] - g[0]))
    excess = (o_small - o_large) * h
    m = max(1, math.floor(excess / node_deficit) + 1)
    for _ in range(64):
        amp = amplify(net, v, m)
        a_small, a_large = _objective_gains(amp, small, large, w, h)
        if a_large - a_small > tol:
            return {"m": m, "horizon": h, "gain_small": a_small, "gain_large": a_large}
        m *= 2
    raise NotFound("amplification did not produce a full-objective violation")


# -- equivalence checks ---------------------------------------------------------------


def _mc_check(name, est, se, exact, samples, retried=False):
    p = np.clip(exact, 0, 1)
    se_exact = np.sqrt(p * (1 - p) / samples)
    tol = MC_SIGMAS * np.maximum(se, se_exact) + 1e-12
    dev = np.abs(est - exact)
    return {
        "check": name,
        "passed": bool(np.all(dev <= tol)),
        "max_deviation": float(dev.max()) if dev.size else 0.0,
        "max_z": float((dev / np.maximum(tol / MC_SIGMAS, 1e-300)).max()) if dev.size else 0.0,
        "tolerance": f"{MC_SIGMAS:g} stderr",
        "samples": samples,
        "retried": retried,
    }


def _with_retry(fn, samples):
    res = fn(samples, False)
    if not res["passed"]:
        res = fn(4 * samples, True)
    return res


def check_equivalences(
    net: InfoNetwork,
    seeds: SeedSets,
    horizon: int,
    samples: int = 10000,
    seed: int = 0,
    n_theta: int = 100,
    threads: int = 1,
    levels: int | None = None,
    strict: bool = False,
) -> dict:
    """Cross-check the NLT process, the Path-Effect process and the random walk.

    ``levels``/``strict`` swap in discretized thresholds and a ``>`` activation
    rule; they exist to confirm that the checks catch a broken model.
    """
    seeds.validate(net)
    checks = []

    # (i) NLT and Path-Effect produce identical active sets for every theta
    a_mask = np.zeros(net.size, dtype=bool)
    a_mask[list(seeds.all)] = True
    mismatches = 0
    theta = threshold_matrix(net, seed, 0, n_theta, levels)
    X = simulate_batch(net, theta, a_mask, np.zeros(net.size, bool), horizon, strict)
    for i in range(n_theta):
        traj, _ = run_path_effect(net, seeds.all, ThresholdConfig(theta[i]), horizon, seed + i)
        mismatches += int(not np.array_equal(traj.active, X[i]))
    checks.append({"check": "nlt-equals-path-effect", "passed": mismatches == 0, "mismatches": mismatches,
                   "trials": n_theta, "tolerance": "exact"})

    # (iv) permanent seeds vs dummy chains, trajectory by trajectory and in expectation
    tr = transform_permanent(net, seeds.permanent, horizon)
    orig_X = simulate_batch(net, theta, _mask(net, seeds.transient), _mask(net, seeds.permanent), horizon, strict)
    lifted = np.stack([tr.lift_thresholds(th) for th in theta])
    tmask = np.zeros(tr.network.size, dtype=bool)
    tmask[list(tr.transient_seed(seeds.transient))] = True
    tX = simulate_batch(tr.network, lifted, tmask, np.zeros(tr.network.size, bool), horizon, strict)
    cols = list(net.nodes)
    bad = int(np.sum(np.any(orig_X[:, :, cols] != tX[:, :, cols], axis=(1, 2))))
    checks.append({"check": "transform-trajectories", "passed": bad == 0, "mismatches": bad,
                   "trials": n_theta, "tolerance": "exact"})

    if net.acyclic:
        q = walk_table(net, seeds, horizon)
        tq = walk_table(tr.network, SeedSets(tr.transient_seed(seeds.transient)), horizon)
        dev = float(np.abs(q[:, cols] - tq[:, cols]).max())
        checks.append({"check": "transform-expectations", "passed": dev <= EXACT_TOL,
                       "max_deviation": dev, "tolerance": EXACT_TOL})

        # (ii) simulated E[X_v^t(A, A_hat)] against the walk probability
        def ind(s, retried):
            est, se = monte_carlo_indicators(net, seeds, horizon, s, seed, threads, levels, strict)
            return _mc_check("indicator-vs-walk", est[:, cols], se[:, cols], q[:, cols], s, retried)

        checks.append(_with_retry(ind, samples))

        # (iii) source events match the walk, whatever the transient seed set is
        target = sorted(seeds.all) or [cols[0]]
        alt = [v for v in cols if v not in seeds.transient]
        exact = np.array([[reach_prob(net, v, target, t) for v in cols] for t in range(horizon + 1)])

        def src(s, retried):
            e1, s1 = monte_carlo_source_events(net, seeds.transient, target, horizon, s, seed, threads)
            e2, s2 = monte_carlo_source_events(net, alt, target, horizon, s, seed + 1, threads)
            r1 = _mc_check("source-event-vs-walk", e1[:, cols], s1[:, cols], exact, s, retried)
            r2 = _mc_check("source-event-other-seed", e2[:, cols], s2[:, cols], exact, s, retried)
            ok = r1["passed"] and r2["passed"]
            return {"check": "source-events", "passed": ok, "parts": [r1, r2], "samples": s, "retried": retried}

        checks.append(_with_retry(src, samples))
    return {"passed": all(c["passed"] for c in checks), "checks": checks,
            "exact_tolerance": EXACT_TOL, "mc_tolerance": f"{MC_SIGMAS:g} stderr"}


def _mask(net, nodes):
    m = np.zeros(net.size, dtype=bool)
    m[list(nodes)] = True
    return m


# -- hardness reduction ----------------------------------------------------------------


def has_vertex_cover(nodes, edges, k) -> bool:
    if k > len(nodes):
        return False
    for cover in itertools.combinations(nodes, k):
        c = set(cover)
        if all(a in c or b in c for a, b in edges):
            return True
    return False


def verify_hardness_reduction(nodes, edges, k: int, ordering=None, limit: int = 10**5) -> bool:
    """Check: a size-k vertex cover exists iff some size-(k+1) permanent set reaches n+1 at T=1."""
    nodes = list(nodes)
    edges = list(edges)
    n = len(nodes)
    if k <= n and math.comb(n, k) + math.comb(n + 1, k + 1) > limit:
        raise SearchBudgetExceeded("graph too large to brute-force")
    cover = has_vertex_cover(nodes, edges, k)
    net, _ = vertex_cover_reduction(nodes, edges, ordering)
    full = False
    if k + 1 <= n + 1:
        for perm in itertools.combinations(net.nodes, k + 1):
            if abs(expected_influence_dag(net, SeedSets((), perm), 1) - (n + 1)) <= EXACT_TOL:
                full = True
                break
    return cover == full


# -- approximation experiment ----------------------------------------------------------


def approximation_sweep(instances: int = 200, max_n: int = 8, max_budget: int = 3, max_horizon: int = 3, seed: int = 0, lazy: bool = True) -> list[dict]:
    """Greedy vs exhaustive optimum on random DAGs with brute-forceable budgets."""
    from .optimize import Budget, brute_force_opt, greedy_max

    rng = np.random.default_rng(seed)
    rows = []
    for i in range(instances):
        n = int(rng.integers(2, max_n + 1))
        net = random_dag(rng, n, max_edges=2 * n)
        T = int(rng.integers(1, max_horizon + 1))
        budget = Budget(int(rng.integers(1, max_budget + 1)), int(rng.integers(1, 3)), int(rng.integers(1, 3)))
        g = greedy_max(net, budget, T, "exact-dag", lazy=lazy)
        o = brute_force_opt(net, budget, T, "exact-dag")
        ratio = 1.0 if o.value <= EXACT_TOL else g.value / o.value
        rows.append({"instance": i, "n": n, "horizon": T, "K": str(budget.K), "c": str(budget.c),
                     "c_hat": str(budget.c_hat), "greedy": g.value, "optimum": o.value, "ratio": ratio})
    return rows
