"""k-th order De Bruijn graph models of causal walks.

Nodes of an order-k graph are walks of length k-1 (k first-order nodes);
an edge (u, v) exists iff u and v overlap in k-1 nodes and the combined
sequence u + v[-1] is an observed (or, for the feasibility variant,
topologically possible) walk of length k. Edge weights are instantiation
counts and are never normalized here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TextIO

from .temporal import StaticWeightedGraph
from .walks import Walk, WalkBag

DEFAULT_NODE_CAP = 10**7


class FeasibilityCapError(RuntimeError):
    """Raised when a feasible De Bruijn graph would exceed the size cap."""


@dataclass(frozen=True)
class DeBruijnGraph:
    """Weighted order-k De Bruijn graph over a first-order node space.

    `ho_nodes` is sorted lexicographically (deterministic indexing);
    `edges` maps (ho index, ho index) pairs to positive integer weights.
    """

    order: int
    ho_nodes: tuple[Walk, ...]
    edges: dict[tuple[int, int], int]
    node_labels: list[str]

    def __post_init__(self):
        idx = {seq: i for i, seq in enumerate(self.ho_nodes)}
        object.__setattr__(self, "_index", idx)
        for (u, v) in self.edges:
            su, sv = self.ho_nodes[u], self.ho_nodes[v]
            if su[1:] != sv[:-1]:
                raise ValueError(f"edge {su}->{sv} violates the overlap condition")

    @property
    def n_nodes(self) -> int:
        return len(self.ho_nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> int:
        return sum(self.edges.values())

    def index_of(self, seq: Walk) -> int:
        return self._index[seq]

    def in_strengths(self) -> list[int]:
        """Sum of incoming edge weights per ho node (no implicit self-loop)."""
        s = [0] * self.n_nodes
        for (_, v), w in self.edges.items():
            s[v] += w
        return s

    def label_of(self, i: int, sep: str = "|") -> str:
        return sep.join(self.node_labels[v] for v in self.ho_nodes[i])


@dataclass(frozen=True)
class BipartiteProjection:
    """Mapping of each ho node onto its last first-order node.

    `ho_order` fixes the row alignment for matrix-shaped consumers: row i
    of a ho feature matrix corresponds to ho_order[i].
    """

    edges: dict[Walk, int]
    ho_order: tuple[Walk, ...]

    def target(self, seq: Walk) -> int:
        return self.edges[seq]

    def targets(self) -> list[int]:
        return [self.edges[seq] for seq in self.ho_order]


def build_debruijn(bag: WalkBag, k: int) -> DeBruijnGraph:
    """Build the order-k De Bruijn graph from causal-walk statistics.

    Nodes are the length-(k-1) walks counted in the bag plus every prefix
    and suffix of a counted length-k walk; edge weights are the length-k
    walk counts. For k=1 the result is the weighted time-aggregated graph.
    """
    if k < 1:
        raise ValueError("order must be >= 1")
    if k > bag.max_length:
        raise ValueError(f"order {k} exceeds bag max_length {bag.max_length}")
    nodes = set(bag.of_length(k - 1))
    transitions = bag.of_length(k)
    for seq in transitions:
        nodes.add(seq[:-1])
        nodes.add(seq[1:])
    ho_nodes = tuple(sorted(nodes))
    index = {seq: i for i, seq in enumerate(ho_nodes)}
    edges: dict[tuple[int, int], int] = {}
    for seq, c in transitions.items():
        key = (index[seq[:-1]], index[seq[1:]])
        edges[key] = edges.get(key, 0) + c
    return DeBruijnGraph(k, ho_nodes, edges, list(bag.node_labels))


def feasible_debruijn(
    s: StaticWeightedGraph, k: int, node_cap: int = DEFAULT_NODE_CAP
) -> DeBruijnGraph:
    """Topological-feasibility variant: nodes are all walks of length k-1
    in the static graph, edges all walks of length k, unit weights.

    Dense graphs explode combinatorially for k >= 3, hence the cap on the
    number of materialized nodes and edges.
    """
    if k < 1:
        raise ValueError("order must be >= 1")
    walks: list[Walk] = [(v,) for v in range(s.n_nodes)]
    for _ in range(k - 1):
        nxt = []
        for seq in walks:
            for w in s.successors(seq[-1]):
                nxt.append(seq + (w,))
                if len(nxt) > node_cap:
                    raise FeasibilityCapError(
                        f"feasible order-{k} graph exceeds cap of {node_cap} nodes"
                    )
        walks = nxt
    ho_nodes = tuple(sorted(walks))
    index = {seq: i for i, seq in enumerate(ho_nodes)}
    edges: dict[tuple[int, int], int] = {}
    for seq in ho_nodes:
        for w in s.successors(seq[-1]):
            if len(edges) >= node_cap:
                raise FeasibilityCapError(
                    f"feasible order-{k} graph exceeds cap of {node_cap} edges"
                )
            edges[(index[seq], index[seq[1:] + (w,)])] = 1
    return DeBruijnGraph(k, ho_nodes, edges, list(s.node_labels))


def bipartite_projection(d: DeBruijnGraph) -> BipartiteProjection:
    """Map each ho node (u_0, ..., u_{k-1}) to its last entry u_{k-1}."""
    return BipartiteProjection({seq: seq[-1] for seq in d.ho_nodes}, d.ho_nodes)


def in_strength(d: DeBruijnGraph, v: Walk) -> int:
    """Sum of weights of edges into ho node v (excluding the implicit unit
    self-loop added by message-passing layers)."""
    if v not in d._index:
        raise KeyError(f"unknown ho node {v}")
    target = d.index_of(v)
    return sum(w for (_, t), w in d.edges.items() if t == target)


def write_debruijn(d: DeBruijnGraph, sink: TextIO) -> None:
    """Serialize: header comments, isolated nodes as `# node` lines, then
    one `u0|u1|...<TAB>v0|v1|...<TAB>weight` line per edge, sorted."""
    for lab in d.node_labels:
        if "|" in lab or "," in lab or "\t" in lab or "\n" in lab:
            raise ValueError(f"node label {lab!r} contains a separator character")
    sink.write(f"# order: {d.order}\n")
    sink.write(f"# nodes: {','.join(d.node_labels)}\n")
    incident = set()
    for (u, v) in d.edges:
        incident.add(u)
        incident.add(v)
    for i in range(d.n_nodes):
        if i not in incident:
            sink.write(f"# node\t{d.label_of(i)}\n")
    for (u, v) in sorted(d.edges):
        sink.write(f"{d.label_of(u)}\t{d.label_of(v)}\t{d.edges[(u, v)]}\n")


def read_debruijn(source: TextIO | Sequence[str]) -> DeBruijnGraph:
    """Parse the format written by `write_debruijn`."""
    order = None
    node_labels: list[str] = []
    index: dict[str, int] = {}
    isolated: list[Walk] = []
    weighted: dict[tuple[Walk, Walk], int] = {}

    def to_seq(part: str) -> Walk:
        return tuple(index[lab] for lab in part.split("|"))

    for raw in source:
        line = raw.rstrip("\n")
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("order:"):
                order = int(body.split(":", 1)[1])
            elif body.startswith("nodes:"):
                node_labels = body.split(":", 1)[1].strip().split(",")
                index = {lab: i for i, lab in enumerate(node_labels)}
            elif body.startswith("node\t"):
                isolated.append(to_seq(body.split("\t", 1)[1]))
            continue
        u_part, v_part, w_part = line.split("\t")
        weighted[(to_seq(u_part), to_seq(v_part))] = int(w_part)
    if order is None or not node_labels:
        raise ValueError("De Bruijn header incomplete (order, nodes)")
    nodes = set(isolated)
    for (u, v) in weighted:
        nodes.add(u)
        nodes.add(v)
    ho_nodes = tuple(sorted(nodes))
    seq_index = {seq: i for i, seq in enumerate(ho_nodes)}
    edges = {(seq_index[u], seq_index[v]): w for (u, v), w in weighted.items()}
    return DeBruijnGraph(order, ho_nodes, edges, node_labels)
