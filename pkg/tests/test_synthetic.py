from collections import Counter

import pytest

from dbgnn import (
    aggregate,
    count_causal_walks,
    generate_temp_clusters,
    shuffle_timestamps,
)
from dbgnn.temporal import parse_edge_list


def within_cluster_walk_count(g, clusters, delta=1):
    bag = count_causal_walks(g, delta, 2)
    return sum(
        c for seq, c in bag.of_length(2).items()
        if clusters[seq[0]] == clusters[seq[1]] == clusters[seq[2]]
    )


def test_default_sizes_match_target_statistics():
    g, assignment = generate_temp_clusters(seed=0)
    assert g.n_nodes == 30
    assert g.n_events == 60000
    assert aggregate(g).n_edges == 560
    assert sorted(Counter(assignment.clusters).values()) == [10, 10, 10]


def test_small_instance():
    g, assignment = generate_temp_clusters(n=6, m=18, n_pairs=50, seed=1)
    assert g.n_nodes == 6
    assert g.n_events == 100
    assert len(set(assignment.clusters)) == 3


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        generate_temp_clusters(n=10)  # not a multiple of 3
    with pytest.raises(ValueError):
        generate_temp_clusters(n=6, m=31)  # more edges than ordered pairs
    with pytest.raises(ValueError):
        generate_temp_clusters(n_pairs=0)


def test_deterministic_for_fixed_seed():
    a, ca = generate_temp_clusters(n=9, m=30, n_pairs=100, seed=5)
    b, cb = generate_temp_clusters(n=9, m=30, n_pairs=100, seed=5)
    assert a.events == b.events
    assert ca == cb


def test_swap_pass_only_permutes_timestamps():
    kwargs = dict(n=12, m=60, n_pairs=400, seed=3)
    swapped, _ = generate_temp_clusters(**kwargs)
    plain, _ = generate_temp_clusters(apply_swaps=False, **kwargs)
    assert Counter((e.source, e.target) for e in swapped.events) == Counter(
        (e.source, e.target) for e in plain.events
    )
    assert Counter(e.timestamp for e in swapped.events) == Counter(
        e.timestamp for e in plain.events
    )
    assert aggregate(swapped).weights == aggregate(plain).weights


def test_every_window_is_one_causal_walk():
    for apply_swaps in (False, True):
        g, _ = generate_temp_clusters(n=9, m=40, n_pairs=200, seed=7,
                                      apply_swaps=apply_swaps)
        bag = count_causal_walks(g, 1, 2)
        assert bag.total_of_length(2) == 200


def test_planted_signal_survives_only_without_shuffling():
    for seed in range(3):
        g, assignment = generate_temp_clusters(n=15, m=120, n_pairs=2000, seed=seed)
        clusters = assignment.clusters
        planted = within_cluster_walk_count(g, clusters)
        shuffled = within_cluster_walk_count(shuffle_timestamps(g, seed=seed + 50), clusters)
        assert planted > shuffled


def test_shuffle_preserves_aggregate():
    g, _ = generate_temp_clusters(n=9, m=30, n_pairs=150, seed=2)
    shuffled = shuffle_timestamps(g, seed=11)
    assert aggregate(shuffled).weights == aggregate(g).weights
    assert Counter(e.timestamp for e in shuffled.events) == Counter(
        e.timestamp for e in g.events
    )


def test_shuffle_single_event_unchanged():
    g = parse_edge_list("a b 17")
    shuffled = shuffle_timestamps(g, seed=0)
    assert shuffled.events == g.events
