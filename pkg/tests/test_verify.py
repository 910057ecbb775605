import json

import numpy as np
import pytest

from nltim import SeedSets, build_network
from nltim.errors import NotFound, SearchBudgetExceeded
from nltim.generators import random_dag
from nltim.verify import (
    Counterexample,
    check_equivalences,
    check_submodularity,
    has_vertex_cover,
    search_counterexample,
    verify_hardness_reduction,
)

K3 = (["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")])


def test_dag_sweep_has_no_violations(rng):
    for _ in range(5):
        net = random_dag(rng, int(rng.integers(2, 6)))
        rep = check_submodularity(net, 3)
        assert rep.ok and rep.checked > 0


def test_sampled_sweep(rng):
    net = random_dag(rng, 6)
    rep = check_submodularity(net, 2, max_checks=1000, rng=np.random.default_rng(0))
    assert rep.ok and rep.checked == 2 * 2 * (1000 // 6) * 6


@pytest.fixture(scope="module")
def cyclic_witness():
    return search_counterexample("general-cycles", max_n=5, seed=0)


def test_cyclic_witness_reverifies(cyclic_witness):
    cx = Counterexample.from_dict(json.loads(cyclic_witness.to_json()))
    res = cx.verify()
    assert res["ok"]
    assert res["gain_large"] > res["gain_small"]
    amp = cx.amplified
    assert res["amplified_gain_large"] > res["amplified_gain_small"]
    assert abs(res["amplified_gain_large"] - amp["gain_large"]) <= 1e-9


def test_cyclic_witness_network_has_cycle(cyclic_witness):
    from nltim.network import network_from_dict

    net = network_from_dict(cyclic_witness.network)
    assert not net.acyclic
    assert not any(net.weights[v, v] for v in net.nodes)


def test_sweep_flags_the_witness(cyclic_witness):
    from nltim.network import amplify, network_from_dict

    net = network_from_dict(cyclic_witness.network)
    amp = amplify(net, net.idx(cyclic_witness.target), cyclic_witness.amplified["m"])
    rep = check_submodularity(amp, cyclic_witness.amplified["horizon"], "cells", scope="first-arg")
    assert rep.n_violations >= 1


def test_tampered_witness_fails(cyclic_witness):
    d = json.loads(cyclic_witness.to_json())
    d["witness"]["gaps"] = [g + 1e-3 for g in d["witness"]["gaps"]]
    assert not Counterexample.from_dict(d).verify()["ok"]


def test_self_loop_witness():
    cx = search_counterexample("self-loop-only", max_n=6, seed=0)
    from nltim.network import network_from_dict

    net = network_from_dict(cx.network)
    loops = [v for v in net.nodes if net.weights[v, v] > 0]
    assert len(loops) == 1
    # removing the single self-loop leaves an acyclic network
    d = json.loads(json.dumps(cx.network))
    d["edges"] = [e for e in d["edges"] if e["src"] != e["dst"]]
    assert network_from_dict(d).acyclic
    assert Counterexample.from_dict(json.loads(cx.to_json())).verify()["ok"]


def test_acyclic_search_finds_nothing():
    with pytest.raises(NotFound):
        search_counterexample("acyclic", max_n=4, tries_per_n=40, seed=0, horizons=(2, 3, 4))


def test_equivalences_deterministic_chain(chain):
    rep = check_equivalences(chain, SeedSets([0]), 3, samples=500)
    assert rep["passed"]
    for c in rep["checks"]:
        assert c.get("max_deviation", 0) == 0
        assert c.get("mismatches", 0) == 0


def test_equivalences_random_dag(rng):
    net = random_dag(rng, 6)
    rep = check_equivalences(net, SeedSets([0], [2]), 4, samples=4000, seed=3)
    assert rep["passed"], rep


def grid_network():
    return build_network(
        ["a", "b", "c", "d"],
        [("b", "a", 0.25), ("c", "a", 0.5), ("c", "b", 0.25), ("d", "b", 0.75), ("d", "c", 0.25)],
    )


def test_mutation_is_caught():
    net = grid_network()
    seeds = SeedSets([0, 1])
    # with thresholds on {1/4, ..., 1} the >= rule still matches the walk probabilities
    ok = check_equivalences(net, seeds, 3, samples=4000, levels=4)
    assert ok["passed"]
    broken = check_equivalences(net, seeds, 3, samples=4000, levels=4, strict=True)
    assert not broken["passed"]
    failed = {c["check"] for c in broken["checks"] if not c["passed"]}
    assert "indicator-vs-walk" in failed


def test_vertex_cover():
    assert has_vertex_cover(*K3, 2)
    assert not has_vertex_cover(*K3, 1)
    assert has_vertex_cover(["x", "y", "z"], [], 0)


def test_hardness_examples():
    assert verify_hardness_reduction(*K3, 2)
    assert verify_hardness_reduction(*K3, 1)
    assert verify_hardness_reduction(["x", "y", "z"], [], 0)
    assert verify_hardness_reduction(*K3, 2, ordering=["c", "a", "b"])


def test_hardness_budget():
    nodes = [str(i) for i in range(30)]
    with pytest.raises(SearchBudgetExceeded):
        verify_hardness_reduction(nodes, [], 10)
