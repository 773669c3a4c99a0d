import itertools

import numpy as np
import pytest

from jnsc.crnf import (ExtractionError, all_admissible_edge_masks, brute_force, build_crnf_ilp,
                       build_weighted_rnf_ilp, close_assignment, extract_flow, greedy_assignment,
                       spectra_to_assignment)
from jnsc.netgen import GrowthParams, Network, fig1_network, grow_dag
from jnsc.rainbow import (DescriptionSet, DistortionModel, average_distortion, edge_spectrum, fig1_flow,
                          is_admissible, rainbow_flow_vector, validate_flow)
from jnsc.solver import Status, combinatorial_bound, solve

from _instances import instance_stream


def edge(u, v, c):
    return Network((0, 1), ((0, 1, float(c)),), frozenset({0}), frozenset({1}))


def test_fig1_model_shape():
    net, desc = fig1_network(1), DescriptionSet(2, 1.0)
    m = build_crnf_ilp(net, desc)
    assert len(m.edge_vars) == 12
    assert len(m.node_vars) == 10
    assert m.lb[m.node_vars[(1, 1)]] == 1 and m.lb[m.node_vars[(1, 2)]] == 1
    # in-flow for 4 non-source nodes x 2 colors, duplication for 6 edges x 2, capacity 6
    sizes = {k: hi - lo for k, (lo, hi) in m.families.items()}
    assert sizes["in-flow"] == 8
    assert sizes["duplication"] == 12
    assert sizes["capacity"] == 6
    assert sorted(np.nonzero(m.c)[0].tolist()) == sorted(m.node_vars[(t, k)] for t in (2, 3, 4, 5)
                                                           for k in (1, 2))


def test_single_node_model():
    net = Network((0,), (), frozenset({0}), frozenset())
    m = build_crnf_ilp(net, DescriptionSet(2))
    assert m.A_ub.shape[0] == 0
    sol = solve(m)
    assert sol.status is Status.OPTIMAL and sol.objective_value == 0


def test_zero_capacity():
    net = fig1_network(1)
    zero = Network(net.node_ids, tuple((u, v, 0.0) for u, v, _ in net.edges), net.sources, net.sinks)
    m = build_crnf_ilp(zero, DescriptionSet(2))
    assert all(m.ub[i] == 0 for i in m.edge_vars.values())
    assert solve(m).objective_value == 0
    assert brute_force(zero, DescriptionSet(2)) == 0


def test_fig1_solve_and_extract():
    net, desc = fig1_network(1), DescriptionSet(2, 1.0)
    sol = solve(build_crnf_ilp(net, desc))
    assert sol.status is Status.OPTIMAL
    assert sol.objective_value == 6
    flow = extract_flow(sol, net, desc)
    assert len(flow) == 4
    a = edge_spectrum(flow, (1, 2))
    b = edge_spectrum(flow, (1, 3))
    assert len(a) == len(b) == 1 and a != b
    for e in [(2, 4), (2, 5)]:
        assert edge_spectrum(flow, e) == a
    for e in [(3, 4), (3, 5)]:
        assert edge_spectrum(flow, e) == b
    # same as the worked flow up to swapping the two colors
    swap = {1: 1, 2: 2} if a == {1} else {1: 2, 2: 1}
    from jnsc.rainbow import RainbowFlow
    assert RainbowFlow((p, swap[c]) for p, c in flow) == fig1_flow()


@pytest.mark.parametrize("C", [0.5, 1.0, 3.0])
def test_fig1_any_capacity(C):
    desc = DescriptionSet(2, C)
    assert solve(build_crnf_ilp(fig1_network(C), desc)).objective_value == 6
    assert brute_force(fig1_network(C), desc) == 6


def test_brute_force_small_cases():
    assert brute_force(fig1_network(1), DescriptionSet(2)) == 6
    assert brute_force(edge(0, 1, 1), DescriptionSet(2)) == 1
    assert brute_force(edge(0, 1, 2), DescriptionSet(2)) == 2
    big = grow_dag(GrowthParams(12, 3, 3, 0))
    with pytest.raises(ValueError, match="enumeration"):
        brute_force(big, DescriptionSet(3))


def test_solver_matches_brute_force():
    for net, K in instance_stream(101, 120):
        desc = DescriptionSet(K)
        model = build_crnf_ilp(net, desc)
        sol = solve(model)
        assert sol.status is Status.OPTIMAL
        assert sol.objective_value == brute_force(net, desc)
        assert model.is_feasible(sol.assignment)
        assert sol.objective_value == model.evaluate(sol.assignment)
        assert sol.objective_value <= combinatorial_bound(model)


def test_solver_without_heuristic_or_orbits():
    for net, K in instance_stream(7, 40):
        desc = DescriptionSet(K)
        model = build_crnf_ilp(net, desc)
        ref = brute_force(net, desc)
        assert solve(model, heuristic=False).objective_value == ref
        assert solve(model, orbital=False).objective_value == ref
        assert solve(build_crnf_ilp(net, desc, symmetry_breaking=True)).objective_value == ref


def test_extraction_round_trip():
    for net, K in instance_stream(55, 60):
        desc = DescriptionSet(K)
        model = build_crnf_ilp(net, desc)
        sol = solve(model)
        x = close_assignment(model, sol.assignment)
        flow = extract_flow(x, net, desc, model)
        assert validate_flow(flow, net, desc) == []
        assert is_admissible(flow, net, desc)
        q = rainbow_flow_vector(flow, net, K).q
        for t in net.sinks:
            assert q[t] == sum(int(round(x[model.node_vars[(t, k)]])) for k in desc.ids)
        for (e, k), i in model.edge_vars.items():
            assert (k in edge_spectrum(flow, e)) == (x[i] > 0.5)


def test_extract_empty_and_inconsistent():
    net, desc = fig1_network(1), DescriptionSet(2)
    model = build_crnf_ilp(net, desc)
    x = np.zeros(model.n_vars)
    assert len(extract_flow(x, net, desc, model)) == 0
    x[model.edge_vars[((2, 4), 1)]] = 1  # node 2 never receives color 1
    with pytest.raises(ExtractionError):
        extract_flow(x, net, desc, model)


def test_monotone_in_capacity_and_K():
    rng = np.random.default_rng(5)
    for net, K in instance_stream(9, 30, max_K=2):
        desc = DescriptionSet(K)
        base = solve(build_crnf_ilp(net, desc)).objective_value
        i = int(rng.integers(len(net.edges))) if net.edges else None
        if i is not None:
            edges = list(net.edges)
            u, v, c = edges[i]
            edges[i] = (u, v, c + 1)
            raised = Network(net.node_ids, tuple(edges), net.sources, net.sinks, net.sink_weights)
            assert solve(build_crnf_ilp(raised, desc)).objective_value >= base
        more = solve(build_crnf_ilp(net, DescriptionSet(K + 1))).objective_value
        assert more >= base


def test_time_limited_solve_reports_gap():
    net = grow_dag(GrowthParams(50, 3, 3, 1))
    model = build_crnf_ilp(net, DescriptionSet(8))
    sol = solve(model, node_limit=3)
    assert sol.status is Status.TIMED_OUT
    assert sol.feasible and model.is_feasible(sol.assignment)
    assert sol.bound >= sol.objective_value
    assert sol.gap == sol.bound - sol.objective_value


def test_initial_incumbent_is_kept():
    net = grow_dag(GrowthParams(30, 3, 3, 2))
    desc = DescriptionSet(4)
    model = build_crnf_ilp(net, desc)
    good = close_assignment(model, solve(model).assignment)
    sol = solve(model, node_limit=0, heuristic=False, initial=good)
    assert sol.objective_value == model.evaluate(good)


def test_greedy_is_feasible():
    for net, K in instance_stream(21, 40):
        model = build_crnf_ilp(net, DescriptionSet(K))
        x = greedy_assignment(model)
        assert model.is_feasible(x)


# -- weighted program ------------------------------------------------------------

def test_weighted_with_cardinality_delta_is_scaled_crnf():
    for net, K in instance_stream(31, 25):
        desc = DescriptionSet(K)
        flat = Network(net.node_ids, net.edges, net.sources, net.sinks)
        w = solve(build_weighted_rnf_ilp(flat, desc, DistortionModel.cardinality(K)))
        c = solve(build_crnf_ilp(flat, desc))
        assert w.objective_value == pytest.approx(c.objective_value / K)


def test_weighted_matches_brute_force():
    rng = np.random.default_rng(77)
    for net, K in instance_stream(41, 60):
        desc = DescriptionSet(K)
        steps = np.sort(rng.random(K))[::-1]
        levels = DistortionModel(tuple(np.concatenate([[1.0], steps * 0.9])))
        model = build_weighted_rnf_ilp(net, desc, levels)
        sol = solve(model)
        ref = brute_force(net, desc, levels)
        assert sol.objective_value == pytest.approx(ref, abs=1e-9)
        # objective is delta(0)*sum p minus the weighted distortion of the extracted flow
        x = close_assignment(model, sol.assignment)
        flow = extract_flow(x, net, desc, model)
        avg = average_distortion(flow, net, levels)
        assert model.objective_offset - len(net.sinks) * avg == pytest.approx(ref, abs=1e-9)


def test_weighted_fig1_convex_delta_keeps_crnf_flow():
    net, desc = fig1_network(1), DescriptionSet(2)
    levels = DistortionModel((1.0, 0.25, 0.2))
    best = None
    for masks, held in all_admissible_edge_masks(net, desc):
        val = sum(levels.delta(len(held[t])) for t in net.sinks)
        best = val if best is None else min(best, val)
    sol = solve(build_weighted_rnf_ilp(net, desc, levels))
    assert 4 * 1.0 - sol.objective_value == pytest.approx(best)
    flow = extract_flow(sol, net, desc)
    assert rainbow_flow_vector(flow, net, 2).q == {2: 1, 3: 1, 4: 2, 5: 2}


def test_weighted_single_sink_reachability():
    net = Network((0, 1, 2), ((0, 1, 1.0), (1, 2, 1.0)), frozenset({0}), frozenset({2}))
    sol = solve(build_weighted_rnf_ilp(net, DescriptionSet(1), DistortionModel((1.0, 0.0))))
    assert sol.objective_value == 1.0


def test_weighted_constant_delta_is_flat():
    net, desc = fig1_network(1), DescriptionSet(2)
    sol = solve(build_weighted_rnf_ilp(net, desc, DistortionModel.constant(2, 0.7)))
    assert sol.objective_value == 0.0


def test_weighted_needs_enough_levels():
    with pytest.raises(ValueError):
        build_weighted_rnf_ilp(fig1_network(1), DescriptionSet(3), DistortionModel((1.0, 0.5)))


def test_spectra_assignment_consistency():
    net, desc = fig1_network(1), DescriptionSet(2)
    for masks, held in itertools.islice(all_admissible_edge_masks(net, desc), 200):
        model = build_crnf_ilp(net, desc)
        x = spectra_to_assignment(model, masks)
        assert model.is_feasible(x)
        assert model.evaluate(x) == sum(len(held[t]) for t in net.sinks)
