"""Synthetic dynamic graph with planted clusters in the causal topology.

The static topology is a uniform random directed graph and carries no
cluster signal at all; the signal lives purely in the temporal ordering.
Windows of two consecutive events form causal walks of length two, and a
timestamp-swapping pass makes within-cluster continuations overrepresented
without changing the topology or the activation frequency of any edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .temporal import TemporalEdge, TemporalGraph

# Consecutive windows start 3 time units apart so that, at delta=1, causal
# walks can never span two windows.
WINDOW_SPACING = 3


@dataclass(frozen=True)
class ClusterAssignment:
    """Cluster id per node, three equal non-overlapping clusters."""

    clusters: tuple[int, ...]

    def __post_init__(self):
        sizes = np.bincount(self.clusters, minlength=3)
        if len(sizes) != 3 or sizes.max() - sizes.min() > 1:
            raise ValueError("expected three clusters of (nearly) equal size")

    def __getitem__(self, v: int) -> int:
        return self.clusters[v]


def _random_directed_graph(n: int, m: int, rng) -> list[tuple[int, int]]:
    chosen = rng.choice(n * (n - 1), size=m, replace=False)
    edges = []
    for code in sorted(chosen.tolist()):
        u, r = divmod(code, n - 1)
        v = r if r < u else r + 1
        edges.append((u, v))
    return edges


def _window_events(edges, n_pairs, rng):
    """Sample n_pairs two-event windows from uniformly random compatible
    edge pairs (first edge's target equals second edge's source)."""
    by_source: dict[int, list[int]] = {}
    for j, (u, _) in enumerate(edges):
        by_source.setdefault(u, []).append(j)
    compatible = [
        (i, j) for i, (_, v) in enumerate(edges) for j in by_source.get(v, ())
    ]
    if not compatible:
        raise ValueError("random graph has no compatible edge pairs")
    picks = rng.integers(0, len(compatible), size=n_pairs)
    events = []
    for w, p in enumerate(picks.tolist()):
        (v0, v1), (_, v2) = edges[compatible[p][0]], edges[compatible[p][1]]
        t = WINDOW_SPACING * w
        events.append(TemporalEdge(v0, v1, t))
        events.append(TemporalEdge(v1, v2, t + 1))
    return events


def _swap_pass(events, clusters, n_pairs, rng):
    """For each window center, swap the second-edge timestamps of one
    within->out window and one out->within window sharing that center,
    turning them into a within-cluster and a cross-cluster walk. Every
    window is consumed at most once; attempts with no match are skipped.
    Only timestamps move, so edge topology and frequencies are untouched.
    """
    pools_a: dict[int, list[int]] = {}  # C(v0) == C(v1) != C(v2)
    pools_b: dict[int, list[int]] = {}  # C(v0) != C(v1) == C(v2)
    centers = []
    for w in range(n_pairs):
        first, second = events[2 * w], events[2 * w + 1]
        c = first.target
        centers.append(c)
        same_in = clusters[first.source] == clusters[c]
        same_out = clusters[second.target] == clusters[c]
        if same_in and not same_out:
            pools_a.setdefault(c, []).append(w)
        elif not same_in and same_out:
            pools_b.setdefault(c, []).append(w)

    consumed = np.zeros(n_pairs, dtype=bool)

    def draw(pool: list[int]) -> int | None:
        while pool:
            i = int(rng.integers(0, len(pool)))
            w = pool[i]
            pool[i] = pool[-1]
            pool.pop()
            if not consumed[w]:
                return w
        return None

    for w in range(n_pairs):
        c = centers[w]
        pool_a = pools_a.get(c)
        pool_b = pools_b.get(c)
        if not pool_a or not pool_b:
            continue
        wa = draw(pool_a)
        if wa is None:
            continue
        wb = draw(pool_b)
        if wb is None:
            pool_a.append(wa)  # put the half-drawn partner back
            continue
        ea, eb = events[2 * wa + 1], events[2 * wb + 1]
        events[2 * wa + 1] = TemporalEdge(ea.source, ea.target, eb.timestamp)
        events[2 * wb + 1] = TemporalEdge(eb.source, eb.target, ea.timestamp)
        consumed[wa] = True
        consumed[wb] = True
    return events


def generate_temp_clusters(
    n: int = 30,
    m: int = 560,
    n_pairs: int = 30000,
    seed: int = 0,
    apply_swaps: bool = True,
) -> tuple[TemporalGraph, ClusterAssignment]:
    """Generate the planted-cluster dynamic graph.

    Returns a directed temporal graph with 2 * n_pairs events and the
    cluster assignment (three equal clusters). `apply_swaps=False` skips
    the timestamp-swapping pass and yields the unplanted null version.
    """
    if n < 3 or n % 3 != 0:
        raise ValueError("n must be a positive multiple of 3")
    if not (1 <= m <= n * (n - 1)):
        raise ValueError(f"m must be in [1, {n * (n - 1)}]")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    edges = _random_directed_graph(n, m, rng)
    perm = rng.permutation(n)
    clusters = tuple(int(perm[v]) // (n // 3) for v in range(n))
    events = _window_events(edges, n_pairs, rng)
    if apply_swaps:
        events = _swap_pass(events, clusters, n_pairs, rng)
    g = TemporalGraph([str(v) for v in range(n)], events, directed=True)
    return g, ClusterAssignment(clusters)


def shuffle_timestamps(g: TemporalGraph, seed: int = 0) -> TemporalGraph:
    """Uniformly permute the timestamp multiset across events; topology and
    activation counts are unchanged."""
    rng = np.random.default_rng(seed)
    ts = [e.timestamp for e in g.events]
    perm = rng.permutation(len(ts))
    events = [
        TemporalEdge(e.source, e.target, ts[perm[i]]) for i, e in enumerate(g.events)
    ]
    return TemporalGraph(g.node_labels, events, directed=g.directed)
