import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nltim import amplify, build_network, load_network, save_network, topological_order, transform_permanent
from nltim.errors import (
    CyclicNetwork,
    DuplicateEdge,
    ReservedLabel,
    UnknownEndpoint,
    VoidInPermanentSet,
    VoidTarget,
    WeightOutOfRange,
    WeightSumExceedsOne,
)
from nltim.exact import reach_prob
from nltim.generators import random_dag, random_network
from nltim.network import find_cycle, network_from_dict, read_edge_csv, vertex_cover_reduction


def test_void_absorbs_slack():
    net = build_network(["a", "b"], [("b", "a", 0.7)])
    a, b, void = net.idx("a"), net.idx("b"), net.void
    assert net.weights[b, void] == pytest.approx(0.3)
    assert net.weights[a, void] == 1.0
    assert net.acyclic


def test_isolated_node_points_to_void():
    net = build_network(["a"], [])
    assert net.out_neighbors(0) == [(net.void, 1.0)]


@pytest.mark.parametrize("w", [1.2, 0.0, -0.1, float("nan")])
def test_weight_out_of_range(w):
    with pytest.raises(WeightOutOfRange):
        build_network(["a", "b"], [("b", "a", w)])


def test_construction_errors():
    with pytest.raises(DuplicateEdge):
        build_network(["a", "b"], [("b", "a", 0.2), ("b", "a", 0.3)])
    with pytest.raises(WeightSumExceedsOne):
        build_network(["a", "b", "c"], [("c", "a", 0.6), ("c", "b", 0.6)])
    with pytest.raises(UnknownEndpoint):
        build_network(["a"], [("a", "z", 0.5)])
    with pytest.raises(ReservedLabel):
        build_network(["__void"], [])


def test_topological_order_chain():
    net = build_network(["a", "b", "c"], [("c", "b", 1.0), ("b", "a", 1.0)])
    assert [net.labels[i] for i in topological_order(net)] == ["__void", "a", "b", "c"]


def test_two_cycle_witness():
    net = build_network(["a", "b"], [("a", "b", 0.5), ("b", "a", 0.5)])
    assert not net.acyclic
    with pytest.raises(CyclicNetwork) as exc:
        topological_order(net)
    assert sorted(exc.value.cycle) == ["a", "b"]
    cyc = find_cycle(net)
    # consecutive witness entries are joined by an edge
    for x, y in zip(cyc, cyc[1:] + cyc[:1]):
        assert net.weights[x, y] > 0


def test_diamond_order(diamond):
    pos = {net_i: k for k, net_i in enumerate(topological_order(diamond))}
    idx = diamond.idx
    assert pos[idx("w")] < pos[idx("u1")] < pos[idx("v")]
    assert pos[idx("w")] < pos[idx("u2")] < pos[idx("v")]


def test_order_respects_every_edge(rng):
    for _ in range(30):
        net = random_dag(rng, int(rng.integers(1, 9)))
        pos = {v: k for k, v in enumerate(topological_order(net))}
        assert pos[net.void] == 0
        for v, u, _ in net.raw_edges:
            assert pos[u] < pos[v]


def test_transform_empty_is_identity(diamond):
    tr = transform_permanent(diamond, [], 4)
    assert tr.network.size == diamond.size
    np.testing.assert_array_equal(tr.network.weights, diamond.weights)


def test_transform_chain_shape():
    net = build_network(["a", "b"], [("a", "b", 0.4), ("b", "a", 1.0)])
    tr = transform_permanent(net, [net.idx("a")], 3)
    new = tr.network
    a = new.idx("a")
    d = [new.idx(f"__dummy:a:{i}") for i in (1, 2, 3)]
    assert new.out_neighbors(a) == [(d[0], 1.0)]
    assert new.out_neighbors(d[0]) == [(d[1], 1.0)]
    assert new.out_neighbors(d[1]) == [(d[2], 1.0)]
    assert new.out_neighbors(d[2]) == [(new.void, 1.0)]
    assert len(tr.dummies) == 3
    assert not new.counted[d].any()


def test_transform_keeps_acyclicity(rng):
    for _ in range(20):
        net = random_dag(rng, 6)
        perm = [v for v in net.nodes if rng.random() < 0.4]
        tr = transform_permanent(net, perm, 3)
        assert tr.network.acyclic
        assert tr.network.size - net.size == 3 * len(perm)


def test_transform_rejects_void(diamond):
    with pytest.raises(VoidInPermanentSet):
        transform_permanent(diamond, [diamond.void], 2)


def test_dummy_chain_reach_identity(rng):
    # reaching the i-th dummy of y at time t is reaching y at time t - i
    for _ in range(10):
        net = random_dag(rng, 5)
        y = int(rng.integers(5))
        T = 4
        tr = transform_permanent(net, [y], T)
        new = tr.network
        for v in net.nodes:
            for i, d in enumerate(tr.chains[y], start=1):
                for t in range(i, T + 1):
                    assert reach_prob(new, v, [d], t) == reach_prob(new, v, [y], t - i)


def test_amplify():
    net = build_network(["a", "b"], [("b", "a", 0.5)])
    with pytest.raises(ValueError):
        amplify(net, 0, 0)
    with pytest.raises(VoidTarget):
        amplify(net, net.void, 2)
    amp = amplify(net, net.idx("b"), 3)
    assert amp.size == net.size + 3
    leaves = [lab for lab in amp.labels if lab.startswith("__leaf:")]
    assert len(leaves) == 3
    for lab in leaves:
        assert amp.out_neighbors(amp.idx(lab)) == [(amp.idx("b"), 1.0)]


def test_reduction_single_edge():
    net, dummy = vertex_cover_reduction(["u", "v"], [("u", "v")])
    # the later node v listens to the earlier node u
    assert net.out_neighbors(net.idx("v")) == [(net.idx("u"), 1.0)]
    assert net.out_neighbors(net.idx("u")) == [(dummy, 1.0)]
    assert net.acyclic


def test_reduction_empty_graph():
    net, dummy = vertex_cover_reduction(["x", "y"], [])
    for lab in ("x", "y"):
        assert net.out_neighbors(net.idx(lab)) == [(dummy, 1.0)]


def test_reduction_uniform_weights():
    net, _ = vertex_cover_reduction(["a", "b", "c"], [("a", "b"), ("a", "c"), ("b", "c")])
    assert net.out_neighbors(net.idx("c")) == [(net.idx("a"), 0.5), (net.idx("b"), 0.5)]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.booleans())
def test_rows_stochastic_and_roundtrip(seed, n, cyclic):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n, self_loops=True) if cyclic else random_dag(rng, n)
    np.testing.assert_allclose(net.weights.sum(axis=1), 1.0, atol=1e-12)
    again = network_from_dict(json.loads(json.dumps(net.to_dict())))
    np.testing.assert_array_equal(again.weights, net.weights)
    assert again.labels == net.labels
    tr = transform_permanent(net, [0], 2)
    np.testing.assert_allclose(tr.network.weights.sum(axis=1), 1.0, atol=1e-12)


def test_file_roundtrip(tmp_path, diamond):
    for name in ("g.json", "g.csv"):
        save_network(diamond, tmp_path / name)
        back = load_network(tmp_path / name)
        np.testing.assert_array_equal(
            back.weights[np.ix_([back.idx(x) for x in diamond.labels], [back.idx(x) for x in diamond.labels])],
            diamond.weights,
        )


def test_csv_requires_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,0.5\n")
    with pytest.raises(ValueError):
        read_edge_csv(p)
