"""Command-line interface: ``nltim {evaluate,optimize,simulate,check}``.

Machine-readable JSON goes to stdout; diagnostics go to stderr (level from the
``NLT_LOG`` environment variable).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .diffusion import SeedSets, monte_carlo_influence, run_nlt, sample_thresholds
from .errors import CyclicNetwork, InvalidSeeds, NetworkError, NLTError, NotFound, SearchBudgetExceeded
from .exact import expected_indicator_cells, expected_indicator_dag
from .generators import random_dag, random_seeds
from .network import load_network, require_acyclic
from .optimize import Budget, greedy_max, make_evaluator

log = logging.getLogger("nltim")

EXIT_FAIL = 1
EXIT_IO = 2
EXIT_CYCLIC = 3
EXIT_SEEDS = 4

DEFAULT_HORIZON = 10
DEFAULT_SAMPLES = 10000


def _labels(text: str | None) -> list[str]:
    if not text:
        return []
    if text.startswith("@"):
        text = Path(text[1:]).read_text().replace("\n", ",")
    return [x.strip() for x in text.split(",") if x.strip()]


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _common(p, seeds=True, method=True):
    p.add_argument("--network", help="network file (.json or .csv edge list)")
    if seeds:
        p.add_argument("--transient", default="", help="comma-separated labels or @file")
        p.add_argument("--permanent", default="", help="comma-separated labels or @file")
    p.add_argument("--horizon", "-T", type=int, default=DEFAULT_HORIZON, help="time horizon T (default: %(default)s)")
    if method:
        p.add_argument("--method", "--evaluator", dest="method", default="exact-dag",
                       choices=["exact-dag", "cells", "mc"], help="evaluator (default: %(default)s)")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="Monte-Carlo samples (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="PRNG seed (default: %(default)s)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; output does not depend on it")
    p.add_argument("--out", help="output file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nltim", description="Non-progressive linear threshold influence toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="expected influence of a seed pair")
    _common(p)
    p.add_argument("--figure", help="write expected active-node curve here")

    p = sub.add_parser("optimize", help="greedy influence maximization under a budget")
    _common(p, seeds=False)
    p.add_argument("--budget", "-K", type=str, required=True)
    p.add_argument("--cost-transient", type=str, default="1")
    p.add_argument("--cost-permanent", type=str, default="1")
    p.add_argument("--lazy", action="store_true", help="lazy (stale-bound) greedy")
    p.add_argument("--timing", action="store_true", help="add wall_ms to the JSON (breaks byte-identical reruns)")

    p = sub.add_parser("simulate", help="one trajectory (--samples 1) or a Monte-Carlo estimate")
    _common(p, method=False)
    p.add_argument("--figure", help="write a trajectory heatmap here (single run only)")

    p = sub.add_parser("check", help="verification harness")
    checks = p.add_subparsers(dest="check", required=True)

    c = checks.add_parser("submodularity")
    _common(c, seeds=False)
    c.add_argument("--random-dags", type=int, default=0)
    c.add_argument("--max-n", type=int, default=7)
    c.add_argument("--scope", choices=["first-arg", "second-arg", "both"], default="both")

    c = checks.add_parser("counterexample")
    c.add_argument("--family", choices=["general-cycles", "self-loop-only", "acyclic"], default="general-cycles")
    c.add_argument("--max-n", type=int, default=6)
    c.add_argument("--horizons", default="2,3,4,5,6,8", help="comma-separated horizons to try")
    c.add_argument("--tries", type=int, default=400, help="networks sampled per size")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", help="write the witness JSON here")
    c.add_argument("--figure", help="plot per-t gains of the witness")

    c = checks.add_parser("witness", help="re-verify a serialized counterexample")
    c.add_argument("path")

    c = checks.add_parser("equivalence")
    _common(c, method=False)
    c.add_argument("--random-dags", type=int, default=0)
    c.add_argument("--max-n", type=int, default=8)

    c = checks.add_parser("hardness")
    c.add_argument("--graph", required=True, help='JSON {"nodes": [...], "edges": [[u, v], ...]}')
    c.add_argument("--k", type=int, help="cover size; omit to check every k")

    c = checks.add_parser("approximation", help="greedy/optimum ratios on random DAGs")
    c.add_argument("--instances", type=int, default=200)
    c.add_argument("--max-n", type=int, default=8)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", help="CSV of per-instance ratios")
    c.add_argument("--figure", help="ratio histogram")
    return parser


def _network(args):
    if not args.network:
        raise NetworkError("--network is required")
    return load_network(args.network)


def _seeds(net, args) -> SeedSets:
    return SeedSets.from_labels(net, _labels(args.transient), _labels(args.permanent))


def cmd_evaluate(args) -> int:
    net = _network(args)
    seeds = _seeds(net, args)
    out = {"evaluator": args.method, "horizon": args.horizon, **seeds.labels(net)}
    if args.method == "mc":
        est = monte_carlo_influence(net, seeds, args.horizon, args.samples, args.seed, args.threads)
        out.update(value=est.mean, stderr=est.stderr, samples=est.samples, seed=est.seed)
        q = None
    else:
        if args.method == "exact-dag":
            q = expected_indicator_dag(net, seeds, args.horizon).q
        else:
            q = expected_indicator_cells(net, seeds, args.horizon, threads=args.threads)
        out["value"] = float(q[1:, net.counted].sum()) / args.horizon
    if q is not None and args.out:
        from .exact import ReachTable

        Path(args.out).write_text(ReachTable(q, net).to_csv())
    if q is not None and args.figure:
        from .report import plot_expected_activity

        plot_expected_activity(q, net.counted, args.figure)
    _emit(out)
    return 0


def cmd_optimize(args) -> int:
    net = _network(args)
    if args.method == "exact-dag":
        require_acyclic(net)
    budget = Budget(args.budget, args.cost_transient, args.cost_permanent)
    ev = make_evaluator(net, args.horizon, args.method, args.samples, args.seed, args.threads)
    t0 = time.perf_counter()
    sol = greedy_max(net, budget, args.horizon, ev, lazy=args.lazy)
    wall_ms = (time.perf_counter() - t0) * 1000
    log.info("optimize finished in %.1f ms", wall_ms)
    out = sol.to_dict(net)
    out.update(horizon=args.horizon, budget=str(budget.K), cost_transient=str(budget.c),
               cost_permanent=str(budget.c_hat), lazy=args.lazy)
    if args.method == "mc":
        out.update(samples=args.samples, seed=args.seed)
    if args.timing:
        out["wall_ms"] = wall_ms
    if args.out:
        Path(args.out).write_text(json.dumps(out, sort_keys=True) + "\n")
    _emit(out)
    return 0


def cmd_simulate(args) -> int:
    net = _network(args)
    seeds = _seeds(net, args)
    if args.samples == 1:
        traj = run_nlt(net, seeds, sample_thresholds(net, args.seed), args.horizon)
        text = traj.to_csv()
        if args.figure:
            from .report import plot_trajectory

            plot_trajectory(traj, args.figure)
        if args.out:
            Path(args.out).write_text(text)
            _emit({"trajectory": args.out, "rows": args.horizon + 1, "seed": args.seed})
        else:
            sys.stdout.write(text)
        return 0
    est = monte_carlo_influence(net, seeds, args.horizon, args.samples, args.seed, args.threads)
    out = {**est.to_dict(), "horizon": args.horizon}
    if args.out:
        Path(args.out).write_text(json.dumps(out, sort_keys=True) + "\n")
    _emit(out)
    return 0


def _check_submodularity(args) -> int:
    from .verify import check_submodularity

    reports = []
    if args.network:
        reports.append(check_submodularity(_network(args), args.horizon, args.method, args.scope,
                                           samples=args.samples, seed=args.seed))
    rng = np.random.default_rng(args.seed)
    for _ in range(args.random_dags):
        n = int(rng.integers(2, args.max_n + 1))
        net = random_dag(rng, n)
        reports.append(check_submodularity(net, args.horizon, args.method, args.scope,
                                           samples=args.samples, seed=args.seed))
    total = sum(r.n_violations for r in reports)
    _emit({
        "instances": len(reports),
        "checked": sum(r.checked for r in reports),
        "violations": total,
        "max_violation": max((r.max_violation for r in reports), default=0.0),
        "horizon": args.horizon,
        "evaluator": args.method,
        "reports": [r.to_dict() for r in reports if not r.ok],
    })
    return 0 if total == 0 else EXIT_FAIL


def _check_counterexample(args) -> int:
    from .verify import search_counterexample

    horizons = [int(x) for x in args.horizons.split(",")]
    try:
        cx = search_counterexample(args.family, args.max_n, horizons, args.seed, args.tries)
    except NotFound as exc:
        _emit({"found": False, "family": args.family, "reason": str(exc)})
        return EXIT_FAIL
    check = cx.verify()
    if args.out:
        Path(args.out).write_text(cx.to_json() + "\n")
    if args.figure:
        from .report import plot_counterexample

        from .network import network_from_dict
        from .verify import _node_gains

        net = network_from_dict(cx.network)
        g = _node_gains(net, net.idx(cx.target), [net.idx(x) for x in cx.small],
                        [net.idx(x) for x in cx.large], net.idx(cx.w), cx.horizon)
        plot_counterexample(g[0], g[1], args.figure, title=f"{cx.family}: node {cx.target}")
    _emit({"found": True, "verified": check["ok"], **cx.to_dict()})
    return 0 if check["ok"] else EXIT_FAIL


def _check_witness(args) -> int:
    from .verify import Counterexample

    cx = Counterexample.from_dict(json.loads(Path(args.path).read_text()))
    res = cx.verify()
    _emit(res)
    return 0 if res["ok"] else EXIT_FAIL


def _check_equivalence(args) -> int:
    from .verify import check_equivalences

    results = []
    if args.network:
        net = _network(args)
        results.append(check_equivalences(net, _seeds(net, args), args.horizon, args.samples, args.seed,
                                          threads=args.threads))
    rng = np.random.default_rng(args.seed)
    for _ in range(args.random_dags):
        net = random_dag(rng, int(rng.integers(2, args.max_n + 1)))
        a, ah = random_seeds(rng, net)
        results.append(check_equivalences(net, SeedSets(a, ah), args.horizon, args.samples,
                                          int(rng.integers(2**31)), threads=args.threads))
    ok = all(r["passed"] for r in results)
    _emit({"instances": len(results), "passed": ok, "horizon": args.horizon, "samples": args.samples,
           "results": results})
    return 0 if ok else EXIT_FAIL


def _check_hardness(args) -> int:
    from .verify import verify_hardness_reduction

    data = json.loads(Path(args.graph).read_text())
    nodes = list(data["nodes"])
    edges = [(e["src"], e["dst"]) if isinstance(e, dict) else tuple(e) for e in data.get("edges", [])]
    ks = [args.k] if args.k is not None else list(range(len(nodes) + 1))
    results = {str(k): verify_hardness_reduction(nodes, edges, k) for k in ks}
    ok = all(results.values())
    _emit({"graph": args.graph, "n": len(nodes), "iff_holds": results, "passed": ok})
    return 0 if ok else EXIT_FAIL


def _check_approximation(args) -> int:
    from .verify import approximation_sweep

    rows = approximation_sweep(args.instances, args.max_n, seed=args.seed)
    ratios = [r["ratio"] for r in rows]
    if args.out:
        import csv

        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    if args.figure:
        from .report import plot_ratio_histogram

        plot_ratio_histogram(ratios, args.figure)
    ok = min(ratios) >= 0.5
    _emit({"instances": len(rows), "min_ratio": min(ratios), "mean_ratio": float(np.mean(ratios)),
           "below_half": sum(r < 0.5 for r in ratios), "passed": ok})
    return 0 if ok else EXIT_FAIL


CHECKS = {
    "submodularity": _check_submodularity,
    "counterexample": _check_counterexample,
    "witness": _check_witness,
    "equivalence": _check_equivalence,
    "hardness": _check_hardness,
    "approximation": _check_approximation,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=os.environ.get("NLT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "evaluate":
            return cmd_evaluate(args)
        if args.command == "optimize":
            return cmd_optimize(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        return CHECKS[args.check](args)
    except CyclicNetwork as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CYCLIC
    except InvalidSeeds as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEEDS
    except (OSError, ValueError, KeyError, json.JSONDecodeError, NetworkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SearchBudgetExceeded, NLTError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
