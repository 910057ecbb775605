import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nltim import (
    SeedSets,
    build_network,
    exact_influence_cells,
    expected_indicator_cells,
    expected_indicator_dag,
    expected_influence_dag,
    influence,
    pass_prob,
    reach_prob,
    run_nlt,
    sample_thresholds,
)
from nltim.errors import CellBudgetExceeded, CyclicNetwork
from nltim.exact import cell_partition, permanent_gain_table, transient_gain_table, walk_distribution, walk_table
from nltim.generators import random_dag, random_network, random_seeds


def test_reach_examples(chain, fork):
    assert reach_prob(fork, 0, [0], 0) == 1
    assert reach_prob(chain, chain.idx("b"), [chain.idx("a")], 1) == 1
    assert reach_prob(fork, fork.idx("v"), [fork.idx("u1")], 1) == 0.5


def test_pass_examples(fork):
    v, u1 = fork.idx("v"), fork.idx("u1")
    for t in range(4):
        assert pass_prob(fork, u1, [u1], t) == 1
    assert pass_prob(fork, v, [u1], 3) == 0.5
    assert pass_prob(fork, v, [], 3) == 0


def test_reach_by_hand_enumeration(diamond):
    # v -> u1|u2 (1/2 each), then u -> w with 1/2 or u -> void with 1/2
    v, w = diamond.idx("v"), diamond.idx("w")
    assert reach_prob(diamond, v, [w], 2) == 0.5
    assert reach_prob(diamond, v, [w], 3) == 0
    assert pass_prob(diamond, v, [w], 5) == 0.5
    assert reach_prob(diamond, v, [diamond.void], 2) == 0.5


def test_forward_distribution_conserves_mass(rng):
    for _ in range(20):
        net = random_network(rng, 6, self_loops=True)
        for t in range(6):
            p = walk_distribution(net, int(rng.integers(6)), t)
            assert abs(p.sum() - 1) < 1e-12
            assert (p >= 0).all()


def test_forward_and_backward_agree(rng):
    net = random_dag(rng, 6)
    for t in range(5):
        p = walk_distribution(net, 0, t)
        for u in net.nodes:
            assert abs(p[u] - reach_prob(net, 0, [u], t)) < 1e-12


def test_dag_examples(chain, fork, rng):
    assert expected_influence_dag(chain, SeedSets([0]), 2) == 0.5
    assert expected_influence_dag(fork, SeedSets(), 3) == 0
    net = random_dag(rng, 5)
    assert expected_influence_dag(net, SeedSets((), net.nodes), 3) == 5
    q = expected_indicator_dag(fork, SeedSets([fork.idx("u1")]), 1).q
    assert q[1, fork.idx("v")] == 0.5


def test_dag_transient_only_is_reach(rng):
    for _ in range(10):
        net = random_dag(rng, 6)
        u = int(rng.integers(6))
        q = expected_indicator_dag(net, SeedSets([u]), 4).q
        for v in net.nodes:
            for t in range(5):
                assert q[t, v] == pytest.approx(reach_prob(net, v, [u], t), abs=1e-12)


def test_dag_refuses_cycles():
    net = build_network(["a", "b"], [("a", "b", 0.5), ("b", "a", 0.5)])
    with pytest.raises(CyclicNetwork):
        expected_influence_dag(net, SeedSets([0]), 2)


def test_cells_examples(chain, fork):
    th = sample_thresholds(chain, 0)
    det = run_nlt(chain, SeedSets([0]), th, 3)
    assert cell_partition(chain).n_cells == 1
    assert exact_influence_cells(chain, SeedSets([0]), 3) == influence(det)
    assert exact_influence_cells(fork, SeedSets([fork.idx("u1")]), 1) == 0.5
    assert cell_partition(fork).n_cells == 2


def test_cell_budget(rng):
    net = random_dag(rng, 8, edge_prob=1.0)
    with pytest.raises(CellBudgetExceeded):
        exact_influence_cells(net, SeedSets([0]), 2, cell_budget=10)


def test_cells_thread_invariance(rng):
    net = random_dag(rng, 7, edge_prob=0.8)
    s = SeedSets([0], [1])
    np.testing.assert_array_equal(
        expected_indicator_cells(net, s, 3, threads=1), expected_indicator_cells(net, s, 3, threads=4)
    )


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7), st.integers(1, 4))
def test_dp_matches_cells(seed, n, T):
    rng = np.random.default_rng(seed)
    net = random_dag(rng, n, max_edges=12)
    a, ah = random_seeds(rng, net)
    s = SeedSets(a, ah)
    dp = expected_indicator_dag(net, s, T).q
    cells = expected_indicator_cells(net, s, T)
    np.testing.assert_allclose(dp, cells, atol=1e-9, rtol=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(1, 5))
def test_gain_decomposition(seed, n, T):
    rng = np.random.default_rng(seed)
    net = random_dag(rng, n)
    a, ah = random_seeds(rng, net)
    s = SeedSets(a, ah)
    free = [v for v in net.nodes if v not in s.all]
    if not free:
        return
    w = free[int(rng.integers(len(free)))]
    base = walk_table(net, s, T)
    g_t = transient_gain_table(net, s, w, T)
    g_p = permanent_gain_table(net, s, w, T)
    np.testing.assert_allclose(walk_table(net, s.add(w, "transient"), T) - base, g_t, atol=1e-9, rtol=0)
    np.testing.assert_allclose(walk_table(net, s.add(w, "permanent"), T) - base, g_p, atol=1e-9, rtol=0)
    assert (g_t >= -1e-12).all()
    assert (g_p - g_t >= -1e-12).all()


def test_reach_table_csv(chain):
    text = expected_indicator_dag(chain, SeedSets([0]), 2).to_csv()
    assert text.splitlines() == ["t,a,b", "0,1,0", "1,0,1", "2,0,0"]
