import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snd.grounddist import (
    AgnosticParams,
    ConfigError,
    IccParams,
    LtcParams,
    ModelConfig,
    Quantization,
    build_cost_graph,
    dense_ground_distance,
    icc_nearest_active,
    shortest_paths_from,
)
from snd.netcore import Network, NetworkState, ValidationError

EPS = 1e-6


def _cost(x):
    # independent quantizer: half-up rounding, clamp to [1, 1e6]
    return int(min(max(math.floor(x + 0.5), 1), 10**6))


def test_agnostic_friendly_edge():
    net = Network(2, [0], [1], comm=[1.0], adopt=[1.0])
    cg = build_cost_graph(net, NetworkState([1, 0]), 1, ModelConfig("agnostic"))
    assert cg.costs.tolist() == [AgnosticParams().c_friendly]


def test_agnostic_adverse_edge():
    net = Network(2, [0], [1], comm=[1.0], adopt=[1.0])
    cg = build_cost_graph(net, NetworkState([1, -1]), 1)
    assert cg.costs.tolist() == [16]


def test_agnostic_case_split_default_comm():
    # missing comm frequencies add one cost unit per edge; an opposing endpoint makes the edge adverse
    net = Network(4, [0, 1, 2, 3], [1, 2, 0, 1])
    state = NetworkState([1, 0, -1, 0])
    assert build_cost_graph(net, state, 1).costs.tolist() == [1 + 1, 1 + 16, 1 + 16, 1 + 4]
    assert build_cost_graph(net, state, -1).costs.tolist() == [1 + 16, 1 + 4, 1 + 16, 1 + 4]


def test_agnostic_comm_and_adoption_terms():
    net = Network(2, [0, 1], [1, 0], comm=[2.0, 1.0], adopt=[1.0, 0.5])
    cg = build_cost_graph(net, NetworkState([1, 1]), 1)
    assert cg.costs.tolist() == [1, _cost(1 + 100 * math.log(2) + 100 * math.log(2))]


def test_param_ordering_enforced():
    with pytest.raises(ConfigError):
        AgnosticParams(c_friendly=4, c_neutral=4, c_adverse=16)
    with pytest.raises(ConfigError):
        IccParams(epsilon=0.5, default_p=0.1)
    with pytest.raises(ConfigError):
        ModelConfig("icc", AgnosticParams())
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({"model": "sir"})


def test_model_config_round_trip():
    cfg = ModelConfig.from_dict({"model": "icc", "epsilon": 1e-4, "scale": 50, "cap": 1000})
    assert cfg.params == IccParams(epsilon=1e-4)
    assert cfg.quant == Quantization(50, 1000)
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg


def _icc_table_network():
    # 0 -> 1, 0 -> 2, 1 -> 2, 2 -> 3, 3 -> 0, every p = 0.5
    return Network(4, [0, 0, 1, 2, 3], [1, 2, 2, 3, 0], activation_prob=[0.5] * 5)


def test_icc_hand_table_single_seed():
    net = _icc_table_network()
    state = NetworkState([1, 0, 0, 0])
    eps_cost = _cost(1 + 100 * -math.log(EPS))
    spread = _cost(1 + 100 * -math.log((0.5 - EPS) / 0.5))
    cg = build_cost_graph(net, state, 1, ModelConfig("icc", IccParams(epsilon=EPS)))
    # 0->1, 0->2 spread from the seed; 1->2, 2->3 leave neutral nodes; 3->0 is farther than the seed itself
    assert cg.costs.tolist() == [spread, spread, eps_cost, eps_cost, eps_cost]
    cg = build_cost_graph(net, state, -1, ModelConfig("icc", IccParams(epsilon=EPS)))
    assert cg.costs.tolist() == [eps_cost] * 5


def test_icc_same_opinion_edge_is_free():
    net = _icc_table_network()
    cg = build_cost_graph(net, NetworkState([1, 1, 0, 0]), 1, ModelConfig("icc"))
    assert cg.costs[0] == 1  # only the default communication unit remains


def test_icc_tied_competitors_share_activation():
    # two active in-neighbours of node 2 at equal distance, p = 0.3 and 0.4
    net = Network(3, [0, 1], [2, 2], activation_prob=[0.3, 0.4])
    state = NetworkState([1, -1, 0])
    dist, p_a = icc_nearest_active(net, state)
    np.testing.assert_allclose(p_a, [0, 0, 0.7])
    assert dist.tolist() == [0, 0, 1]
    cg = build_cost_graph(net, state, 1, ModelConfig("icc"))
    assert cg.costs[0] == _cost(1 + 100 * -math.log((0.3 - EPS) / 0.7))


def test_icc_nearest_active_single_source_and_empty():
    net = Network(4, [0, 1, 2], [1, 2, 3])
    dist, _ = icc_nearest_active(net, NetworkState([1, 0, 0, 0]))
    assert dist.tolist() == [0, 1, 2, 3]
    dist, p_a = icc_nearest_active(net, NetworkState([0, 0, 0, 0]))
    assert np.all(np.isinf(dist)) and np.all(p_a == 0)


def test_ltc_case_split():
    # node 2 has in-neighbours 0 (+), 1 (-), 3 (0); default weight 1/3 each, threshold 0.5
    net = Network(4, [0, 1, 3], [2, 2, 2])
    state = NetworkState([1, -1, 0, 0])
    cg = build_cost_graph(net, state, 1, ModelConfig("ltc", LtcParams(epsilon=EPS)))
    omega = 2 / 3  # two active in-neighbours of weight 1/3 each
    expect_spread = _cost(1 + 100 * -math.log((1 - EPS) * (1 / 3) / omega))
    eps_cost = _cost(1 + 100 * -math.log(EPS))
    assert cg.costs.tolist() == [expect_spread, eps_cost, eps_cost]


def test_ltc_threshold_blocks_spread():
    net = Network(3, [0, 1], [2, 2], thresholds=[0.0, 0.0, 0.9])
    cg = build_cost_graph(net, NetworkState([1, 0, 0]), 1, ModelConfig("ltc"))
    assert cg.costs[0] == _cost(1 + 100 * -math.log(1e-6))


def test_icc_costs_grow_as_epsilon_shrinks():
    net = _icc_table_network()
    state = NetworkState([1, 0, 0, 0])
    prev = None
    for eps in (1e-2, 1e-4, 1e-8, 1e-16):
        c = build_cost_graph(net, state, 1, ModelConfig("icc", IccParams(epsilon=eps))).costs[2]
        assert prev is None or c > prev
        prev = c
    tiny = ModelConfig("icc", IccParams(epsilon=1e-300), Quantization(cap=5000))
    assert build_cost_graph(net, state, 1, tiny).costs[2] == 5000


def test_shortest_path_chain():
    net = Network(3, [0, 1], [1, 2], comm=[1.0, 1.0])
    cg = build_cost_graph(net, NetworkState([0, 0, 0]), 1, ModelConfig("agnostic"))
    assert shortest_paths_from(cg, 0).tolist() == [0, 4, 8]
    d = shortest_paths_from(cg, 2)
    assert d[2] == 0 and d[0] == cg.sentinel and d[1] == cg.sentinel


def test_dense_two_nodes():
    net = Network(2, [0], [1], comm=[1.0])
    D = dense_ground_distance(build_cost_graph(net, NetworkState([0, 0]), 1))
    assert D.tolist() == [[0, 4], [4, 0]]


def test_dense_size_guard():
    net = Network(10, [0], [1])
    with pytest.raises(ValidationError):
        dense_ground_distance(build_cost_graph(net, NetworkState([0] * 10), 1), limit=5)


def _bellman_ford(n, src, dst, w, s, sentinel):
    d = [math.inf] * n
    d[s] = 0
    for _ in range(n - 1):
        for a, b, c in zip(src, dst, w):
            if d[a] + c < d[b]:
                d[b] = d[a] + c
    return [sentinel if math.isinf(x) else x for x in d]


@st.composite
def graphs_with_states(draw, max_n=50):
    n = draw(st.integers(2, max_n))
    density = draw(st.floats(0.02, 0.3))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    A = rng.random((n, n)) < density
    np.fill_diagonal(A, False)
    src, dst = np.nonzero(A)
    ops = rng.choice([-1, 0, 1], n)
    model = draw(st.sampled_from(["agnostic", "icc", "ltc"]))
    return Network(n, src, dst), NetworkState(ops), model


@settings(max_examples=60, deadline=None)
@given(graphs_with_states(), st.sampled_from([1, -1]))
def test_dijkstra_matches_bellman_ford(g, op):
    net, state, model = g
    cg = build_cost_graph(net, state, op, ModelConfig(model))
    for s in range(min(net.n, 5)):
        ref = _bellman_ford(net.n, net.src, net.dst, cg.costs, s, cg.sentinel)
        assert shortest_paths_from(cg, s).tolist() == ref


@settings(max_examples=30, deadline=None)
@given(graphs_with_states(max_n=30), st.sampled_from([1, -1]))
def test_dense_distance_is_semimetric(g, op):
    net, state, model = g
    D = dense_ground_distance(build_cost_graph(net, state, op, ModelConfig(model)))
    assert np.all(np.diag(D) == 0)
    via = (D[:, :, None] + D[None, :, :]).min(axis=1)
    assert np.all(D <= via)


@settings(max_examples=40, deadline=None)
@given(graphs_with_states(max_n=30), st.sampled_from([1, -1]))
def test_costs_in_bounds(g, op):
    net, state, model = g
    q = Quantization(cap=3000)
    cg = build_cost_graph(net, state, op, ModelConfig(model, quant=q))
    assert cg.costs.dtype == np.int64
    assert np.all((cg.costs >= 1) & (cg.costs <= 3000))


def test_symmetric_graph_gives_symmetric_distance():
    net = Network(4, [0, 1, 1, 2, 2, 3], [1, 0, 2, 1, 3, 2])
    D = dense_ground_distance(build_cost_graph(net, NetworkState([0] * 4), 1))
    assert np.array_equal(D, D.T)


@settings(max_examples=30, deadline=None)
@given(graphs_with_states(max_n=20), st.integers(0, 2**32 - 1))
def test_agnostic_costs_permutation_equivariant(g, seed):
    net, state, _ = g
    perm = np.random.default_rng(seed).permutation(net.n)
    pnet = Network(net.n, perm[net.src], perm[net.dst])
    pops = np.empty_like(state.opinions)
    pops[perm] = state.opinions
    a = build_cost_graph(net, state, 1).costs
    b = build_cost_graph(pnet, NetworkState(pops), 1).costs
    assert a.tolist() == b.tolist()


def _icc_scalar(n, edges, p, ops, op, eps):
    # direct evaluation of the ICC case split with hop distances
    active = [v for v in range(n) if ops[v] != 0]
    dist = [math.inf] * n
    frontier = list(active)
    for v in active:
        dist[v] = 0
    while frontier:
        nxt = []
        for u in frontier:
            for a, b in edges:
                if a == u and dist[b] == math.inf:
                    dist[b] = dist[u] + 1
                    nxt.append(b)
        frontier = nxt
    out = []
    for (u, v), puv in zip(edges, p):
        if ops[u] == op and ops[v] == op:
            pr = 1.0
        elif 1 > dist[v]:
            pr = 0.0
        elif ops[u] == op and ops[v] == 0:
            pa = sum(pp for (a, b), pp in zip(edges, p) if b == v and ops[a] != 0 and dist[v] == 1)
            pr = max(0.0, puv - eps) / pa
        else:
            pr = 0.0
        pr = pr if pr > 0 else eps
        out.append(_cost(1 - 100 * math.log(pr)))
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1), st.sampled_from([1, -1]))
def test_icc_matches_scalar_evaluation(n, seed, op):
    rng = np.random.default_rng(seed)
    A = rng.random((n, n)) < 0.4
    np.fill_diagonal(A, False)
    src, dst = np.nonzero(A)
    p = np.round(rng.uniform(0.05, 1.0, src.size), 3)
    ops = rng.choice([-1, 0, 1], n)
    net = Network(n, src, dst, activation_prob=p)
    got = build_cost_graph(net, NetworkState(ops), op, ModelConfig("icc")).costs.tolist()
    assert got == _icc_scalar(n, list(zip(src.tolist(), dst.tolist())), p.tolist(), ops.tolist(), op, EPS)
