"""Dynamic graph data model: time-stamped edge lists, time coarsening, and
aggregation into a weighted static graph.

Node identifiers are arbitrary strings externally and dense integer indices
internally (first-seen order). Undirected graphs store each contact once;
all downstream logic expands contacts to both directions on the fly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, TextIO

_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1


class ParseError(ValueError):
    """Malformed edge-list input; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


@dataclass(frozen=True, slots=True)
class TemporalEdge:
    """A single time-stamped contact (source, target, timestamp)."""

    source: int
    target: int
    timestamp: int


class TemporalGraph:
    """A set of nodes plus a multiset of time-stamped edges.

    Duplicate events (same source, target and timestamp) are permitted and
    counted separately: edge weights of the aggregated graph count
    activations, not distinct contacts.
    """

    __slots__ = ("node_labels", "events", "directed", "_label_index")

    def __init__(
        self,
        node_labels: Sequence[str],
        events: Iterable[TemporalEdge],
        directed: bool = True,
    ):
        self.node_labels = list(node_labels)
        if len(set(self.node_labels)) != len(self.node_labels):
            raise ValueError("duplicate node labels")
        self.events = tuple(events)
        self.directed = bool(directed)
        self._label_index = {lab: i for i, lab in enumerate(self.node_labels)}
        n = len(self.node_labels)
        for e in self.events:
            if not (0 <= e.source < n and 0 <= e.target < n):
                raise ValueError(f"event {e} references an unknown node index")
            if not (_INT64_MIN <= e.timestamp <= _INT64_MAX):
                raise ValueError(f"timestamp {e.timestamp} outside 64-bit range")

    @property
    def n_nodes(self) -> int:
        return len(self.node_labels)

    @property
    def n_events(self) -> int:
        return len(self.events)

    def index_of(self, label: str) -> int:
        return self._label_index[label]

    def directed_events(self) -> Iterator[TemporalEdge]:
        """Events as directed contacts; undirected events yield both
        orientations (same timestamp)."""
        for e in self.events:
            yield e
            if not self.directed:
                yield TemporalEdge(e.target, e.source, e.timestamp)

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"TemporalGraph({self.n_nodes} nodes, {self.n_events} events, {kind})"


class StaticWeightedGraph:
    """Time-aggregated projection of a temporal graph.

    Edge weights count temporal activations. For undirected graphs each
    edge is keyed once by the canonical (min, max) index pair, so the sum
    of weights always equals the number of events of the source graph;
    adjacency accessors expand undirected edges symmetrically.
    """

    __slots__ = ("node_labels", "directed", "weights", "_adj_out", "_adj_in")

    def __init__(
        self,
        node_labels: Sequence[str],
        weights: dict[tuple[int, int], int],
        directed: bool = True,
    ):
        self.node_labels = list(node_labels)
        self.directed = bool(directed)
        self.weights = dict(weights)
        n = len(self.node_labels)
        self._adj_out: list[dict[int, int]] = [dict() for _ in range(n)]
        self._adj_in: list[dict[int, int]] = [dict() for _ in range(n)]
        for (u, v), w in self.weights.items():
            if w < 1:
                raise ValueError(f"edge ({u},{v}) has non-positive weight {w}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) references an unknown node")
            self._adj_out[u][v] = self._adj_out[u].get(v, 0) + w
            self._adj_in[v][u] = self._adj_in[v].get(u, 0) + w
            if not self.directed and u != v:
                self._adj_out[v][u] = self._adj_out[v].get(u, 0) + w
                self._adj_in[u][v] = self._adj_in[u].get(v, 0) + w

    @property
    def n_nodes(self) -> int:
        return len(self.node_labels)

    @property
    def n_edges(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> int:
        return sum(self.weights.values())

    def successors(self, v: int) -> dict[int, int]:
        """Out-neighbors of v with weights (symmetric for undirected)."""
        return self._adj_out[v]

    def predecessors(self, v: int) -> dict[int, int]:
        return self._adj_in[v]

    def weight(self, u: int, v: int) -> int:
        return self._adj_out[u].get(v, 0)

    def directed_edges(self) -> Iterator[tuple[int, int, int]]:
        """All (u, v, weight) triples, expanding undirected edges to both
        orientations."""
        for u, nbrs in enumerate(self._adj_out):
            for v, w in nbrs.items():
                yield u, v, w

    def __repr__(self) -> str:
        return f"StaticWeightedGraph({self.n_nodes} nodes, {self.n_edges} edges)"


def parse_edge_list(source: str | TextIO | Iterable[str], directed: bool = True) -> TemporalGraph:
    """Parse an edge list with one `source target timestamp` event per line.

    Fields are separated by commas or runs of whitespace; `#`-prefixed
    lines are comments. Node labels are mapped to dense indices in
    first-seen order.
    """
    if isinstance(source, str):
        lines: Iterable[str] = source.splitlines()
    else:
        lines = source
    labels: list[str] = []
    index: dict[str, int] = {}
    events: list[TemporalEdge] = []

    def node_id(label: str) -> int:
        if label not in index:
            index[label] = len(labels)
            labels.append(label)
        return index[label]

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}: {line!r}", lineno)
        src, tgt, ts = fields
        try:
            t = int(ts)
        except ValueError:
            raise ParseError(f"timestamp {ts!r} is not an integer", lineno) from None
        if not (_INT64_MIN <= t <= _INT64_MAX):
            raise ParseError(f"timestamp {t} outside 64-bit range", lineno)
        events.append(TemporalEdge(node_id(src), node_id(tgt), t))

    if not events:
        raise ParseError("no events in input")
    return TemporalGraph(labels, events, directed=directed)


def write_edge_list(g: TemporalGraph, sink: TextIO) -> None:
    """Write one `source target timestamp` line per event (whitespace-separated)."""
    for lab in g.node_labels:
        for ch in (",", "\t", "\n", " "):
            if ch in lab:
                raise ValueError(f"node label {lab!r} contains a separator character")
    for e in g.events:
        sink.write(f"{g.node_labels[e.source]} {g.node_labels[e.target]} {e.timestamp}\n")


def aggregate(g: TemporalGraph) -> StaticWeightedGraph:
    """Project a temporal graph onto its weighted time-aggregated graph;
    weight(v, w) counts temporal activations of (v, w)."""
    if g.n_events == 0:
        raise ValueError("cannot aggregate an empty temporal graph")
    counts: Counter[tuple[int, int]] = Counter()
    for e in g.events:
        key = (e.source, e.target)
        if not g.directed and e.source > e.target:
            key = (e.target, e.source)
        counts[key] += 1
    return StaticWeightedGraph(g.node_labels, dict(counts), directed=g.directed)


def coarsen(g: TemporalGraph, bin_width: int) -> TemporalGraph:
    """Rebase every timestamp to floor(t / bin_width).

    Duplicate events created by the binning are kept as separate events so
    activation counts are preserved. bin_width=1 is the identity.
    """
    if bin_width < 1:
        raise ValueError("bin_width must be >= 1")
    if bin_width == 1:
        return g
    events = [TemporalEdge(e.source, e.target, e.timestamp // bin_width) for e in g.events]
    return TemporalGraph(g.node_labels, events, directed=g.directed)


def dedup_events(g: TemporalGraph) -> TemporalGraph:
    """Drop duplicate contacts with identical (source, target, timestamp).

    For undirected graphs (a, b; t) and (b, a; t) count as the same contact.
    Intended for collapsing repeated proximity pings inside one time bin.
    """
    seen: set[tuple[int, int, int]] = set()
    events = []
    for e in g.events:
        key = (e.source, e.target, e.timestamp)
        if not g.directed and e.source > e.target:
            key = (e.target, e.source, e.timestamp)
        if key in seen:
            continue
        seen.add(key)
        events.append(e)
    return TemporalGraph(g.node_labels, events, directed=g.directed)
