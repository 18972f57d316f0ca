import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbgnn import (
    FeasibilityCapError,
    WalkBag,
    aggregate,
    bipartite_projection,
    build_debruijn,
    count_causal_walks,
    feasible_debruijn,
    in_strength,
    parse_edge_list,
)
from dbgnn.debruijn import read_debruijn, write_debruijn
from conftest import random_temporal_graph


def test_first_order_equals_aggregate():
    g = parse_edge_list("a b 1\na b 2\nb c 3\nc a 4")
    bag = count_causal_walks(g, delta=1, max_length=2)
    d1 = build_debruijn(bag, 1)
    s = aggregate(g)
    db_edges = {(d1.ho_nodes[u][0], d1.ho_nodes[v][0]): w for (u, v), w in d1.edges.items()}
    assert db_edges == {(u, v): w for u, v, w in s.directed_edges()}
    assert d1.n_nodes == s.n_nodes


def test_first_order_equals_aggregate_undirected():
    g = parse_edge_list("a b 1\nb c 2", directed=False)
    bag = count_causal_walks(g, delta=1, max_length=1)
    d1 = build_debruijn(bag, 1)
    s = aggregate(g)
    db_edges = {(d1.ho_nodes[u][0], d1.ho_nodes[v][0]): w for (u, v), w in d1.edges.items()}
    assert db_edges == {(u, v): w for u, v, w in s.directed_edges()}


def test_second_order_from_single_walk_count():
    bag = WalkBag(1, 2, {(0, 1, 2): 2}, ["a", "b", "c"])
    d = build_debruijn(bag, 2)
    assert set(d.ho_nodes) == {(0, 1), (1, 2)}
    assert d.n_edges == 1
    assert d.total_weight == 2


def test_order_exceeding_bag_rejected():
    bag = WalkBag(1, 1, {(0, 1): 1}, ["a", "b"])
    with pytest.raises(ValueError):
        build_debruijn(bag, 2)


def test_feasible_two_cycle():
    s = aggregate(parse_edge_list("a b 1\nb a 2"))
    d = feasible_debruijn(s, 2)
    assert set(d.ho_nodes) == {(0, 1), (1, 0)}
    assert set(d.edges) == {
        (d.index_of((0, 1)), d.index_of((1, 0))),
        (d.index_of((1, 0)), d.index_of((0, 1))),
    }


def test_feasible_first_order_is_unit_weighted_graph():
    s = aggregate(parse_edge_list("a b 1\na b 2\nb c 3"))
    d = feasible_debruijn(s, 1)
    assert d.n_nodes == s.n_nodes
    assert all(w == 1 for w in d.edges.values())
    assert d.n_edges == s.n_edges


def test_feasible_three_chain():
    s = aggregate(parse_edge_list("a b 1\nb c 2"))
    d = feasible_debruijn(s, 2)
    assert set(d.ho_nodes) == {(0, 1), (1, 2)}
    assert set(d.edges) == {(d.index_of((0, 1)), d.index_of((1, 2)))}


def test_feasible_cap_guard():
    s = aggregate(parse_edge_list("a b 1\nb a 2\na a 3\nb b 4"))
    with pytest.raises(FeasibilityCapError):
        feasible_debruijn(s, 4, node_cap=5)


def test_bipartite_projection_last_entry():
    bag = WalkBag(1, 2, {(0, 1, 2): 1}, ["a", "b", "c"])
    proj = bipartite_projection(build_debruijn(bag, 2))
    assert proj.target((0, 1)) == 1
    assert proj.target((1, 2)) == 2


def test_bipartite_projection_first_order_identity():
    g = parse_edge_list("a b 1\nb c 2")
    d = build_debruijn(count_causal_walks(g, 1, 1), 1)
    proj = bipartite_projection(d)
    assert all(proj.target((v,)) == v for v in range(3))


def test_bipartite_projection_groups_by_last_node():
    bag = WalkBag(1, 2, {(0, 1, 2): 1, (3, 1, 2): 1, (2, 1, 0): 1}, list("ABCD"))
    proj = bipartite_projection(build_debruijn(bag, 2))
    # (A,B), (D,B), (C,B) all map onto B
    assert proj.target((0, 1)) == 1
    assert proj.target((3, 1)) == 1
    assert proj.target((2, 1)) == 1


def test_in_strength():
    bag = WalkBag(1, 2, {(0, 2, 3): 2, (1, 2, 3): 3, (3, 2, 3): 4, (2, 3, 0): 1}, list("abcd"))
    d = build_debruijn(bag, 2)
    assert in_strength(d, (2, 3)) == 9
    assert in_strength(d, (0, 2)) == 0
    assert in_strength(d, (3, 0)) == 1
    with pytest.raises(KeyError):
        in_strength(d, (0, 1))


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
@settings(max_examples=50, deadline=None)
def test_edge_weights_sum_to_walk_counts(seed, k):
    rng = np.random.default_rng(seed)
    g = random_temporal_graph(rng)
    bag = count_causal_walks(g, delta=2, max_length=3)
    d = build_debruijn(bag, k)
    assert d.total_weight == bag.total_of_length(k)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_observed_subset_of_feasible(seed, k):
    rng = np.random.default_rng(seed)
    g = random_temporal_graph(rng, max_nodes=6, max_events=25)
    bag = count_causal_walks(g, delta=2, max_length=3)
    observed = build_debruijn(bag, k)
    feasible = feasible_debruijn(aggregate(g), k)
    feasible_pairs = {
        (feasible.ho_nodes[u], feasible.ho_nodes[v]) for (u, v) in feasible.edges
    }
    for (u, v) in observed.edges:
        assert (observed.ho_nodes[u], observed.ho_nodes[v]) in feasible_pairs


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_feasible_node_count_matches_matrix_powers(seed, k):
    rng = np.random.default_rng(seed)
    g = random_temporal_graph(rng, max_nodes=5, max_events=12)
    s = aggregate(g)
    adj = np.zeros((s.n_nodes, s.n_nodes), dtype=np.int64)
    for u, v, _ in s.directed_edges():
        adj[u, v] = 1
    walk_count = int(np.linalg.matrix_power(adj, k - 1).sum()) if k > 1 else s.n_nodes
    assert feasible_debruijn(s, k).n_nodes == walk_count


def test_overlap_condition_enforced():
    with pytest.raises(ValueError):
        from dbgnn.debruijn import DeBruijnGraph

        DeBruijnGraph(2, ((0, 1), (2, 0)), {(0, 1): 1}, ["a", "b", "c"])


def test_serialization_rejects_separator_in_labels():
    bag = WalkBag(1, 1, {(0, 1): 1}, ["a|b", "c"])
    d = build_debruijn(bag, 1)
    with pytest.raises(ValueError):
        write_debruijn(d, io.StringIO())


def test_serialization_roundtrip_with_isolated_nodes():
    bag = WalkBag(1, 2, {(0, 1, 2): 2, (3, 3): 5}, list("abcd"))
    d = build_debruijn(bag, 2)
    assert (3, 3) in d.ho_nodes  # isolated: observed walk, never extended
    buf = io.StringIO()
    write_debruijn(d, buf)
    buf.seek(0)
    recovered = read_debruijn(buf)
    assert recovered.order == d.order
    assert recovered.ho_nodes == d.ho_nodes
    assert recovered.edges == d.edges
    assert recovered.node_labels == d.node_labels
