"""Counting causal (time-respecting) walks in a temporal graph.

A node sequence v_0, ..., v_l is a causal walk if every consecutive pair is
realized by an event and consecutive events are strictly ordered in time
with a gap of at most delta. Counts are per instantiation: every distinct
combination of events realizing a sequence counts once.

`count_causal_walks` is the production sliding-window dynamic program;
`enumerate_causal_walks` is a brute-force oracle with identical semantics,
kept deliberately naive for testing.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from .temporal import TemporalGraph

Walk = tuple[int, ...]

_ORACLE_EVENT_LIMIT = 10_000


@dataclass(frozen=True)
class WalkBag:
    """Causal-walk statistics: instantiation counts per node sequence.

    Keys of `counts` are tuples of node indices; a tuple of l+1 nodes is a
    walk of length l (edges), for l = 0..max_length. Length-0 walks carry
    count 1 per node (presence marker).
    """

    delta: int
    max_length: int
    counts: dict[Walk, int]
    node_labels: list[str] = field(default_factory=list)

    def of_length(self, length: int) -> dict[Walk, int]:
        """Counts restricted to walks of the given length (in edges)."""
        return {s: c for s, c in self.counts.items() if len(s) == length + 1}

    def total_of_length(self, length: int) -> int:
        return sum(c for s, c in self.counts.items() if len(s) == length + 1)


def _check_args(delta: int, max_length: int) -> None:
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    if delta < 1:
        raise ValueError("delta must be >= 1")


def count_causal_walks(g: TemporalGraph, delta: int, max_length: int) -> WalkBag:
    """Count causal walks of lengths 0..max_length with maximum gap delta.

    Dynamic program over events in time order: walks of length l ending in
    event e extend walks of length l-1 ending in events into e's source
    within the window (t - delta, t). Undirected events are expanded to
    both orientations on the fly.
    """
    _check_args(delta, max_length)
    counts: dict[Walk, int] = {(v,): 1 for v in range(g.n_nodes)}

    events = sorted(g.directed_events(), key=lambda e: e.timestamp)
    # Per target node: deque of (timestamp, per-length sequence counts) for
    # events still inside the delta window. Events at equal timestamps are
    # appended only after the whole timestamp group is processed, so the
    # deque never contains same-time predecessors.
    recent: dict[int, deque] = defaultdict(deque)

    i = 0
    n_ev = len(events)
    while i < n_ev:
        t = events[i].timestamp
        j = i
        group = []
        while j < n_ev and events[j].timestamp == t:
            e = events[j]
            window = recent[e.source]
            while window and window[0][0] < t - delta:
                window.popleft()
            # dp[l] maps full node sequences of length l to instantiation
            # counts for walks ending exactly with event e.
            dp: list[dict[Walk, int]] = [dict() for _ in range(max_length + 1)]
            dp[1][(e.source, e.target)] = 1
            for _, prev_dp in window:
                for l in range(1, max_length):
                    for seq, c in prev_dp[l].items():
                        ext = seq + (e.target,)
                        dp[l + 1][ext] = dp[l + 1].get(ext, 0) + c
            for l in range(1, max_length + 1):
                for seq, c in dp[l].items():
                    counts[seq] = counts.get(seq, 0) + c
            group.append((t, dp))
            j += 1
        for k in range(i, j):
            recent[events[k].target].append(group[k - i])
        i = j

    return WalkBag(delta, max_length, counts, list(g.node_labels))


def enumerate_causal_walks(g: TemporalGraph, delta: int, max_length: int) -> WalkBag:
    """Brute-force oracle: exhaustively enumerate event subsequences that
    form causal walks. Only suitable for small inputs."""
    _check_args(delta, max_length)
    events = list(g.directed_events())
    if len(events) > _ORACLE_EVENT_LIMIT:
        raise ValueError(
            f"oracle limited to {_ORACLE_EVENT_LIMIT} events, got {len(events)}"
        )
    counts: dict[Walk, int] = {(v,): 1 for v in range(g.n_nodes)}

    def extend(seq: Walk, last_t: int) -> None:
        counts[seq] = counts.get(seq, 0) + 1
        if len(seq) - 1 == max_length:
            return
        for e in events:
            if e.source == seq[-1] and 0 < e.timestamp - last_t <= delta:
                extend(seq + (e.target,), e.timestamp)

    for e in events:
        extend((e.source, e.target), e.timestamp)
    return WalkBag(delta, max_length, counts, list(g.node_labels))


def write_walk_bag(bag: WalkBag, sink: TextIO) -> None:
    """Serialize a walk bag: header comments, then one
    `label,label,...<TAB>count` line per sequence, sorted."""
    for lab in bag.node_labels:
        if "," in lab or "\t" in lab or "\n" in lab:
            raise ValueError(f"node label {lab!r} contains a separator character")
    sink.write(f"# delta: {bag.delta}\n")
    sink.write(f"# max_length: {bag.max_length}\n")
    sink.write(f"# nodes: {','.join(bag.node_labels)}\n")
    for seq in sorted(bag.counts):
        labels = ",".join(bag.node_labels[v] for v in seq)
        sink.write(f"{labels}\t{bag.counts[seq]}\n")


def read_walk_bag(source: TextIO | Sequence[str]) -> WalkBag:
    """Parse the format written by `write_walk_bag`."""
    delta = max_length = None
    node_labels: list[str] = []
    index: dict[str, int] = {}
    counts: dict[Walk, int] = {}
    for raw in source:
        line = raw.rstrip("\n")
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("delta:"):
                delta = int(body.split(":", 1)[1])
            elif body.startswith("max_length:"):
                max_length = int(body.split(":", 1)[1])
            elif body.startswith("nodes:"):
                node_labels = body.split(":", 1)[1].strip().split(",")
                index = {lab: i for i, lab in enumerate(node_labels)}
            continue
        seq_part, count_part = line.split("\t")
        seq = tuple(index[lab] for lab in seq_part.split(","))
        counts[seq] = int(count_part)
    if delta is None or max_length is None or not node_labels:
        raise ValueError("walk bag header incomplete (delta, max_length, nodes)")
    return WalkBag(delta, max_length, counts, node_labels)
