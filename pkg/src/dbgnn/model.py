"""Causality-aware graph neural network over De Bruijn graphs.

Two message-passing branches run in parallel: one on the order-k De Bruijn
graph of causal walks, one on the weighted time-aggregated graph. Both use
the same update rule: each node's new representation is

    h'_v = elu( W . sum_{u in in(v) + {v}} w(u,v) h_u / sqrt(S(v) S(u)) )

with a unit self-loop added per node and S(x) the in-strength including
that self-loop. A bipartite layer then aggregates, per first-order node v,
the set {h_ho[u] + h_fo[v] : u projects onto v} with SUM/MEAN/MAX/MIN; a
final linear layer maps the result to class logits. Gradients are exact
hand-derived reverse-mode rules over the cached forward pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_array

from .debruijn import BipartiteProjection, DeBruijnGraph, bipartite_projection
from .numerics import elu, elu_grad, glorot_uniform
from .temporal import StaticWeightedGraph

AGGREGATORS = ("sum", "mean", "max", "min")


def propagation_matrix(n: int, weighted_edges) -> csr_array:
    """Normalized propagation operator P with P[v, u] = w(u,v)/sqrt(S(v)S(u)).

    A unit self-loop is added to every node and included in the strengths,
    so rows of isolated nodes stay well defined. P @ H propagates features
    along edge direction (u -> v contributes to v).
    """
    entries: dict[tuple[int, int], float] = {}
    for u, v, w in weighted_edges:
        entries[(v, u)] = entries.get((v, u), 0.0) + float(w)
    for v in range(n):
        entries[(v, v)] = entries.get((v, v), 0.0) + 1.0
    strengths = np.zeros(n)
    for (v, _), w in entries.items():
        strengths[v] += w
    keys = sorted(entries)
    rows = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
    cols = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
    vals = np.array(
        [entries[k] / math.sqrt(strengths[k[0]] * strengths[k[1]]) for k in keys]
    )
    return csr_array((vals, (rows, cols)), shape=(n, n))


def debruijn_propagation(d: DeBruijnGraph) -> csr_array:
    return propagation_matrix(d.n_nodes, ((u, v, w) for (u, v), w in d.edges.items()))


def static_propagation(s: StaticWeightedGraph) -> csr_array:
    return propagation_matrix(s.n_nodes, s.directed_edges())


def ho_layer_forward(h: np.ndarray, d: DeBruijnGraph, W: np.ndarray) -> np.ndarray:
    """One De Bruijn message-passing layer on ho features h (one row per
    ho node, in d.ho_nodes order)."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] != d.n_nodes or W.shape[1] != h.shape[1]:
        raise ValueError(f"shape mismatch: h {h.shape}, W {W.shape}, {d.n_nodes} ho nodes")
    return elu((debruijn_propagation(d) @ h) @ W.T)


def fo_layer_forward(h: np.ndarray, s: StaticWeightedGraph, W: np.ndarray) -> np.ndarray:
    """One GCN layer on the weighted time-aggregated graph."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] != s.n_nodes or W.shape[1] != h.shape[1]:
        raise ValueError(f"shape mismatch: h {h.shape}, W {W.shape}, {s.n_nodes} nodes")
    return elu((static_propagation(s) @ h) @ W.T)


def bipartite_forward(
    h_ho: np.ndarray,
    h_fo: np.ndarray,
    b: BipartiteProjection,
    W_b: np.ndarray,
    aggregator: str = "sum",
) -> np.ndarray:
    """Aggregate ho representations onto first-order nodes and transform.

    For each first-order node v the multiset {h_ho[u] + h_fo[v]} over ho
    nodes u projecting onto v is reduced by the aggregator; nodes with no
    incident ho node fall back to their first-order representation alone.
    """
    h_ho = np.asarray(h_ho, dtype=np.float64)
    h_fo = np.asarray(h_fo, dtype=np.float64)
    if h_ho.shape[1] != h_fo.shape[1]:
        raise ValueError(
            f"ho width {h_ho.shape[1]} must equal fo width {h_fo.shape[1]}"
        )
    groups = _projection_groups(b, h_fo.shape[0])
    agg, _ = _aggregate(h_ho, h_fo, groups, aggregator)
    return elu(agg @ W_b.T)


def _projection_groups(b: BipartiteProjection, n_fo: int) -> list[np.ndarray]:
    groups: list[list[int]] = [[] for _ in range(n_fo)]
    for i, t in enumerate(b.targets()):
        groups[t].append(i)
    return [np.array(g, dtype=np.int64) for g in groups]


def _aggregate(h_ho, h_fo, groups, aggregator):
    """Returns (agg matrix, cache needed for the backward pass)."""
    if aggregator not in AGGREGATORS:
        raise ValueError(f"unknown aggregator {aggregator!r}")
    n_fo, width = h_fo.shape
    agg = np.empty_like(h_fo)
    extreme_idx: list[np.ndarray | None] = [None] * n_fo
    for v, g in enumerate(groups):
        if g.size == 0:
            agg[v] = h_fo[v]
        elif aggregator == "sum":
            agg[v] = h_ho[g].sum(axis=0) + g.size * h_fo[v]
        elif aggregator == "mean":
            agg[v] = h_ho[g].mean(axis=0) + h_fo[v]
        else:
            block = h_ho[g]
            pick = block.argmax(axis=0) if aggregator == "max" else block.argmin(axis=0)
            extreme_idx[v] = g[pick]
            agg[v] = block[pick, np.arange(width)] + h_fo[v]
    return agg, extreme_idx


def _aggregate_backward(dagg, h_ho_shape, groups, aggregator, extreme_idx):
    dh_ho = np.zeros(h_ho_shape)
    dh_fo = np.empty_like(dagg)
    width = h_ho_shape[1]
    for v, g in enumerate(groups):
        if g.size == 0:
            dh_fo[v] = dagg[v]
        elif aggregator == "sum":
            dh_ho[g] += dagg[v]
            dh_fo[v] = g.size * dagg[v]
        elif aggregator == "mean":
            dh_ho[g] += dagg[v] / g.size
            dh_fo[v] = dagg[v]
        else:
            np.add.at(dh_ho, (extreme_idx[v], np.arange(width)), dagg[v])
            dh_fo[v] = dagg[v]
    return dh_ho, dh_fo


@dataclass
class DbgnnConfig:
    """Architecture of the two-branch model.

    Layer dim lists include the input width (one-hot size by default); the
    final ho and fo widths must match so the bipartite layer can add the
    representations. `representation_dim` is the bipartite output width d.
    """

    order: int
    ho_layer_dims: list[int]
    fo_layer_dims: list[int]
    n_classes: int
    representation_dim: int = 16
    aggregator: str = "sum"
    seed: int = 0

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if len(self.ho_layer_dims) < 2 or len(self.fo_layer_dims) < 2:
            raise ValueError("each branch needs at least one message-passing layer")
        if any(d < 1 for d in self.ho_layer_dims + self.fo_layer_dims):
            raise ValueError("layer dims must be >= 1")
        if self.ho_layer_dims[-1] != self.fo_layer_dims[-1]:
            raise ValueError(
                f"final ho width {self.ho_layer_dims[-1]} must equal final fo width "
                f"{self.fo_layer_dims[-1]}"
            )
        if self.representation_dim < 1 or self.n_classes < 2:
            raise ValueError("need representation_dim >= 1 and n_classes >= 2")
        if self.aggregator not in AGGREGATORS:
            raise ValueError(f"aggregator must be one of {AGGREGATORS}")

    @classmethod
    def for_graphs(
        cls,
        ho_graph: DeBruijnGraph,
        fo_graph: StaticWeightedGraph,
        n_classes: int,
        first_hidden: int = 16,
        representation_dim: int = 16,
        aggregator: str = "sum",
        seed: int = 0,
    ) -> "DbgnnConfig":
        """Two message-passing layers per branch on one-hot inputs; the
        first hidden width is the tunable knob, the final width equals the
        representation dimension."""
        return cls(
            order=ho_graph.order,
            ho_layer_dims=[ho_graph.n_nodes, first_hidden, representation_dim],
            fo_layer_dims=[fo_graph.n_nodes, first_hidden, representation_dim],
            n_classes=n_classes,
            representation_dim=representation_dim,
            aggregator=aggregator,
            seed=seed,
        )


@dataclass
class ForwardPass:
    logits: np.ndarray
    h_b: np.ndarray
    cache: dict | None = None


class _Branch:
    """A stack of message-passing layers sharing one propagation matrix."""

    def __init__(self, P: csr_array, n_layers: int):
        self.P = P
        self.P_T = P.T.tocsr()
        self.n_layers = n_layers

    def forward(self, h0, weights, cache=None):
        h = h0
        for i in range(self.n_layers):
            m = self.P @ h
            pre = m @ weights[i].T
            h = elu(pre)
            if cache is not None:
                cache.append((m, pre))
        return h

    def backward(self, dh, weights, cache):
        """Gradients of the stacked layers; the input feature gradient is
        not propagated (inputs are fixed one-hot encodings)."""
        grads = [None] * self.n_layers
        for i in range(self.n_layers - 1, -1, -1):
            m, pre = cache[i]
            dpre = dh * elu_grad(pre)
            grads[i] = dpre.T @ m
            if i > 0:
                dh = self.P_T @ (dpre @ weights[i])
        return grads


class DbgnnModel:
    """Two-branch De Bruijn graph neural network with frozen propagation
    structures and trainable weight matrices in `params`."""

    def __init__(self, config: DbgnnConfig, ho_graph: DeBruijnGraph, fo_graph: StaticWeightedGraph):
        if ho_graph.order != config.order:
            raise ValueError(f"graph order {ho_graph.order} != config order {config.order}")
        self.config = config
        self.n_ho = ho_graph.n_nodes
        self.n_fo = fo_graph.n_nodes
        self.ho_branch = _Branch(debruijn_propagation(ho_graph), len(config.ho_layer_dims) - 1)
        self.fo_branch = _Branch(static_propagation(fo_graph), len(config.fo_layer_dims) - 1)
        self.groups = _projection_groups(bipartite_projection(ho_graph), fo_graph.n_nodes)
        rng = np.random.default_rng(config.seed)
        self.params: dict[str, np.ndarray] = {}
        for i in range(1, len(config.ho_layer_dims)):
            self.params[f"ho{i}"] = glorot_uniform(
                rng, config.ho_layer_dims[i], config.ho_layer_dims[i - 1]
            )
        for i in range(1, len(config.fo_layer_dims)):
            self.params[f"fo{i}"] = glorot_uniform(
                rng, config.fo_layer_dims[i], config.fo_layer_dims[i - 1]
            )
        self.params["bip"] = glorot_uniform(
            rng, config.representation_dim, config.ho_layer_dims[-1]
        )
        self.params["cls"] = glorot_uniform(rng, config.n_classes, config.representation_dim)

    def _ho_weights(self):
        return [self.params[f"ho{i}"] for i in range(1, len(self.config.ho_layer_dims))]

    def _fo_weights(self):
        return [self.params[f"fo{i}"] for i in range(1, len(self.config.fo_layer_dims))]

    def one_hot_inputs(self) -> tuple[np.ndarray, np.ndarray]:
        return np.eye(self.n_ho), np.eye(self.n_fo)

    def forward(self, x_ho=None, x_fo=None, keep_cache: bool = False) -> ForwardPass:
        if x_ho is None or x_fo is None:
            eye_ho, eye_fo = self.one_hot_inputs()
            x_ho = eye_ho if x_ho is None else x_ho
            x_fo = eye_fo if x_fo is None else x_fo
        x_ho = np.asarray(x_ho, dtype=np.float64)
        x_fo = np.asarray(x_fo, dtype=np.float64)
        if x_ho.shape != (self.n_ho, self.config.ho_layer_dims[0]):
            raise ValueError(f"expected ho features of shape "
                             f"{(self.n_ho, self.config.ho_layer_dims[0])}, got {x_ho.shape}")
        if x_fo.shape != (self.n_fo, self.config.fo_layer_dims[0]):
            raise ValueError(f"expected fo features of shape "
                             f"{(self.n_fo, self.config.fo_layer_dims[0])}, got {x_fo.shape}")
        cache: dict | None = {"ho": [], "fo": []} if keep_cache else None
        h_ho = self.ho_branch.forward(x_ho, self._ho_weights(), cache["ho"] if keep_cache else None)
        h_fo = self.fo_branch.forward(x_fo, self._fo_weights(), cache["fo"] if keep_cache else None)
        agg, extreme_idx = _aggregate(h_ho, h_fo, self.groups, self.config.aggregator)
        pre_b = agg @ self.params["bip"].T
        h_b = elu(pre_b)
        logits = h_b @ self.params["cls"].T
        if keep_cache:
            cache.update(
                h_ho_shape=h_ho.shape, agg=agg, extreme_idx=extreme_idx, pre_b=pre_b, h_b=h_b
            )
        return ForwardPass(logits, h_b, cache)

    def backward(self, fp: ForwardPass, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Exact gradients of a scalar loss with upstream gradient dlogits,
        for every trainable matrix. Requires forward(keep_cache=True)."""
        if fp.cache is None:
            raise ValueError("backward requires a forward pass with keep_cache=True")
        c = fp.cache
        grads: dict[str, np.ndarray] = {}
        grads["cls"] = dlogits.T @ c["h_b"]
        dh_b = dlogits @ self.params["cls"]
        dpre_b = dh_b * elu_grad(c["pre_b"])
        grads["bip"] = dpre_b.T @ c["agg"]
        dagg = dpre_b @ self.params["bip"]
        dh_ho, dh_fo = _aggregate_backward(
            dagg, c["h_ho_shape"], self.groups, self.config.aggregator, c["extreme_idx"]
        )
        for i, g in enumerate(self.ho_branch.backward(dh_ho, self._ho_weights(), c["ho"]), start=1):
            grads[f"ho{i}"] = g
        for i, g in enumerate(self.fo_branch.backward(dh_fo, self._fo_weights(), c["fo"]), start=1):
            grads[f"fo{i}"] = g
        return grads


class GcnBaseline:
    """First-order branch plus linear classifier; the comparison baseline
    trained under the identical protocol."""

    def __init__(self, fo_layer_dims: list[int], n_classes: int, fo_graph: StaticWeightedGraph,
                 seed: int = 0):
        if len(fo_layer_dims) < 2:
            raise ValueError("need at least one message-passing layer")
        self.fo_layer_dims = list(fo_layer_dims)
        self.n_classes = n_classes
        self.n_fo = fo_graph.n_nodes
        self.branch = _Branch(static_propagation(fo_graph), len(fo_layer_dims) - 1)
        rng = np.random.default_rng(seed)
        self.params = {
            f"fo{i}": glorot_uniform(rng, fo_layer_dims[i], fo_layer_dims[i - 1])
            for i in range(1, len(fo_layer_dims))
        }
        self.params["cls"] = glorot_uniform(rng, n_classes, fo_layer_dims[-1])

    def _fo_weights(self):
        return [self.params[f"fo{i}"] for i in range(1, len(self.fo_layer_dims))]

    def forward(self, x_fo=None, keep_cache: bool = False) -> ForwardPass:
        if x_fo is None:
            x_fo = np.eye(self.n_fo)
        x_fo = np.asarray(x_fo, dtype=np.float64)
        cache: dict | None = {"fo": []} if keep_cache else None
        h = self.branch.forward(x_fo, self._fo_weights(), cache["fo"] if keep_cache else None)
        logits = h @ self.params["cls"].T
        if keep_cache:
            cache["h_last"] = h
        return ForwardPass(logits, h, cache)

    def backward(self, fp: ForwardPass, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        if fp.cache is None:
            raise ValueError("backward requires a forward pass with keep_cache=True")
        grads = {"cls": dlogits.T @ fp.cache["h_last"]}
        dh = dlogits @ self.params["cls"]
        for i, g in enumerate(self.branch.backward(dh, self._fo_weights(), fp.cache["fo"]), start=1):
            grads[f"fo{i}"] = g
        return grads
