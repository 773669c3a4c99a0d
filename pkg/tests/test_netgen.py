import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jnsc.netgen import (CycleError, GrowthParams, Network, NetworkError, fig1_network, grow_dag,
                         load_network, network_from_dict, network_to_dict, save_network)


def test_single_node():
    net = grow_dag(GrowthParams(1))
    assert net.node_ids == (0,)
    assert net.edges == ()
    assert net.sinks == frozenset()
    assert net.sources == {0}


def test_two_nodes_collapse_duplicates():
    net = grow_dag(GrowthParams(2, in_degree_draws=3))
    assert [(u, v) for u, v, _ in net.edges] == [(0, 1)]


@pytest.mark.parametrize("seed", range(5))
def test_growth_structure(seed):
    net = grow_dag(GrowthParams(50, 3, 3, seed))
    assert len(net.node_ids) == 50
    assert net.sources == {0}
    assert net.sinks == set(range(1, 50))
    assert all(w == 1.0 for w in net.sink_weights.values())
    for v in range(1, 50):
        assert 1 <= len(net.predecessors(v)) <= 3
        assert all(u < v for u in net.predecessors(v))
    assert {c for _, _, c in net.edges} <= {1.0, 2.0, 3.0}
    order = net.topological_order()
    pos = {v: i for i, v in enumerate(order)}
    assert all(pos[u] < pos[v] for u, v, _ in net.edges)


def test_growth_uses_all_capacities():
    caps = {c for _, _, c in grow_dag(GrowthParams(200, 3, 3, 7)).edges}
    assert caps == {1.0, 2.0, 3.0}


def test_growth_deterministic_and_seed_sensitive():
    nets = [grow_dag(GrowthParams(30, 3, 3, s)) for s in range(10)]
    assert grow_dag(GrowthParams(30, 3, 3, 4)) == nets[4]
    for i in range(10):
        for j in range(i + 1, 10):
            assert nets[i] != nets[j]


def test_growth_params_validation():
    for bad in [dict(n_nodes=0), dict(n_nodes=3, in_degree_draws=0), dict(n_nodes=3, c_max=0),
                dict(n_nodes=3, seed=-1), dict(n_nodes=3, seed=2**64)]:
        with pytest.raises(ValueError):
            GrowthParams(**bad)


def test_fig1_fixture():
    net = fig1_network(1)
    assert len(net.edges) == 6
    assert all(c == 1.0 for _, _, c in net.edges)
    assert sorted(net.predecessors(4)) == [2, 3]
    assert net.topological_order() == [1, 2, 3, 4, 5]
    assert net.sources == {1} and net.sinks == {2, 3, 4, 5}
    assert fig1_network(2.5).capacity(2, 5) == 2.5
    with pytest.raises(ValueError):
        fig1_network(0)


def test_round_trip_fig1(tmp_path):
    net = fig1_network(1)
    save_network(net, tmp_path / "n.json")
    assert load_network(tmp_path / "n.json") == net


def test_round_trip_many(tmp_path):
    rng = np.random.default_rng(3)
    for i in range(100):
        net = grow_dag(GrowthParams(int(rng.integers(1, 40)), int(rng.integers(1, 5)),
                                    int(rng.integers(1, 5)), int(rng.integers(2**63))))
        path = tmp_path / f"{i}.json"
        save_network(net, path)
        back = load_network(path)
        assert back == net
        assert back.edges == net.edges and back.node_ids == net.node_ids


def test_round_trip_keeps_weights_and_fractional_capacity(tmp_path):
    net = Network((0, 1, 2), ((0, 1, 0.75), (1, 2, 2.0)), frozenset({0}), frozenset({1, 2}), {2: 3.5})
    save_network(net, tmp_path / "w.json")
    back = load_network(tmp_path / "w.json")
    assert back == net
    assert back.sink_weights == {1: 1.0, 2: 3.5}


def _doc():
    return network_to_dict(fig1_network(1))


def test_unknown_node_rejected():
    doc = _doc()
    doc["edges"].append({"from": 5, "to": 9, "capacity": 1})
    with pytest.raises(NetworkError, match="9"):
        network_from_dict(doc)


def test_two_cycle_rejected():
    doc = {"nodes": [0, 1, 2], "edges": [{"from": 0, "to": 1, "capacity": 1},
                                         {"from": 1, "to": 2, "capacity": 1},
                                         {"from": 2, "to": 1, "capacity": 1}],
           "sources": [0], "sinks": [2]}
    with pytest.raises(CycleError):
        network_from_dict(doc)


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.update(colour=1), "colour"),
    (lambda d: d["edges"][0].update(weight=2), "weight"),
    (lambda d: d["edges"][1].pop("capacity"), "capacity"),
    (lambda d: d.pop("sinks"), "sinks"),
    (lambda d: d["edges"][0].update(capacity="x"), "capacity"),
    (lambda d: d["nodes"].append("a"), "nodes"),
])
def test_malformed_documents_name_field(mutate, field):
    doc = _doc()
    mutate(doc)
    with pytest.raises(NetworkError, match=field):
        network_from_dict(doc)


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(NetworkError):
        load_network(p)


@pytest.mark.parametrize("edges, sources, sinks, weights", [
    (((0, 0, 1.0),), {0}, {0}, None),                 # self-loop
    (((0, 1, 1.0), (0, 1, 2.0)), {0}, {1}, None),     # parallel edges
    (((0, 1, -1.0),), {0}, {1}, None),                # negative capacity
    (((0, 1, 1.0),), {0}, {1}, {1: 0.0}),             # zero weight
    ((), {0}, {1}, None),                             # unreachable sink
])
def test_network_invariants(edges, sources, sinks, weights):
    with pytest.raises(NetworkError):
        Network((0, 1), edges, frozenset(sources), frozenset(sinks), weights or {})


def test_zero_capacity_allowed():
    net = Network((0, 1), ((0, 1, 0.0),), frozenset({0}), frozenset({1}))
    assert net.capacity(0, 1) == 0.0
    with pytest.raises(KeyError):
        net.capacity(1, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**64 - 1))
def test_growth_invariants_property(n, m, c, seed):
    net = grow_dag(GrowthParams(n, m, c, seed))
    assert len(net.node_ids) == n
    for v in range(1, n):
        assert 1 <= len(net.predecessors(v)) <= m
    assert all(1 <= cap <= c for _, _, cap in net.edges)
    assert network_from_dict(json.loads(json.dumps(network_to_dict(net)))) == net
