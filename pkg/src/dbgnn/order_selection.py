"""Likelihood-based selection of the optimal De Bruijn graph order.

An order-k model is the maximum-likelihood transition matrix conditioned on
the last k visited nodes (normalized order-k De Bruijn edge weights). To
compare nested orders k0 < k1 both models are evaluated on the final
transition of every observed walk of length k1, the lower-order model being
lifted into the order-k1 state space. Degrees of freedom count feasible
transitions of the static topology minus the row-normalization constraints,
and the likelihood-ratio statistic is referred to a chi-squared null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .debruijn import DEFAULT_NODE_CAP, FeasibilityCapError
from .numerics import chi_squared_cdf
from .temporal import StaticWeightedGraph
from .walks import Walk, WalkBag


def transition_log_probs(bag: WalkBag, k: int) -> dict[Walk, float]:
    """Log MLE transition probabilities of the order-k model, keyed by the
    full (k+1)-node sequence (k-node state plus next node)."""
    if k < 1:
        raise ValueError("order must be >= 1")
    if k > bag.max_length:
        raise ValueError(f"order {k} exceeds bag max_length {bag.max_length}")
    counts = bag.of_length(k)
    totals: dict[Walk, int] = {}
    for seq, c in counts.items():
        state = seq[:-1]
        totals[state] = totals.get(state, 0) + c
    return {seq: math.log(c / totals[seq[:-1]]) for seq, c in counts.items()}


def log_likelihood(bag: WalkBag, k: int, eval_order: int) -> float:
    """Log-likelihood of the order-k model over the final transitions of
    all observed walks of length eval_order.

    Lifting into the eval_order state space makes models of different
    orders nested: each walk contributes one transition, conditioned on its
    last k nodes. The transition is always in the MLE support because the
    final k+1 nodes of an observed walk are themselves an observed walk.
    """
    if not (1 <= k <= eval_order):
        raise ValueError(f"need 1 <= k <= eval_order, got k={k}, eval_order={eval_order}")
    if eval_order > bag.max_length:
        raise ValueError(f"eval_order {eval_order} exceeds bag max_length {bag.max_length}")
    logp = transition_log_probs(bag, k)
    total = 0.0
    for seq, c in bag.of_length(eval_order).items():
        total += c * logp[seq[-(k + 1):]]
    return total


def dof(s: StaticWeightedGraph, k: int, node_cap: int = DEFAULT_NODE_CAP) -> int:
    """Free parameters of the order-k model under the static topology:
    feasible length-k walks minus feasible length-(k-1) walks that have at
    least one continuation (one normalization constraint per such row).

    Computed by exact integer walk counting; aborts like the feasible
    graph construction when the walk count exceeds the cap.
    """
    if k < 1:
        raise ValueError("order must be >= 1")
    ending = [1] * s.n_nodes
    for _ in range(k - 1):
        nxt = [0] * s.n_nodes
        for u in range(s.n_nodes):
            c = ending[u]
            if c:
                for w in s.successors(u):
                    nxt[w] += c
        ending = nxt
        if sum(ending) > node_cap:
            raise FeasibilityCapError(
                f"feasible order-{k} model exceeds cap of {node_cap} states"
            )
    edges = 0
    rows = 0
    for v in range(s.n_nodes):
        out = len(s.successors(v))
        if out:
            edges += ending[v] * out
            rows += ending[v]
    return edges - rows


def likelihood_ratio_test(
    bag: WalkBag,
    s: StaticWeightedGraph,
    k0: int,
    k1: int,
    node_cap: int = DEFAULT_NODE_CAP,
) -> tuple[float, int, float]:
    """Test the order-k0 null against the order-k1 alternative.

    Returns (statistic, delta_dof, p_value) with
    statistic = -2 (log L_k0 - log L_k1), both evaluated at eval_order=k1,
    and p from the chi-squared tail with delta_dof degrees of freedom.
    delta_dof <= 0 yields p = 1 by convention.
    """
    if not (1 <= k0 < k1):
        raise ValueError(f"need 1 <= k0 < k1, got k0={k0}, k1={k1}")
    l0 = log_likelihood(bag, k0, k1)
    l1 = log_likelihood(bag, k1, k1)
    statistic = -2.0 * (l0 - l1)
    delta_dof = dof(s, k1, node_cap) - dof(s, k0, node_cap)
    if delta_dof <= 0:
        p_value = 1.0
    else:
        p_value = 1.0 - chi_squared_cdf(max(statistic, 0.0), delta_dof)
    return statistic, delta_dof, p_value


def select_order(
    bag: WalkBag,
    s: StaticWeightedGraph,
    k_max: int,
    alpha: float = 0.01,
    node_cap: int = DEFAULT_NODE_CAP,
) -> int:
    """Smallest order whose extension is no longer justified: starting at
    k=1, advance to k+1 while the likelihood-ratio test rejects at alpha."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    if k_max > bag.max_length:
        raise ValueError(f"k_max {k_max} exceeds bag max_length {bag.max_length}")
    k = 1
    while k + 1 <= k_max:
        _, _, p_value = likelihood_ratio_test(bag, s, k, k + 1, node_cap)
        if p_value >= alpha:
            break
        k += 1
    return k


@dataclass(frozen=True)
class OrderComparison:
    k0: int
    k1: int
    statistic: float
    delta_dof: int
    p_value: float


@dataclass(frozen=True)
class OrderSelectionResult:
    """Full order-selection report.

    `log_likelihoods` are all evaluated at eval_order=max_order, so they
    are directly comparable (non-decreasing in k); each comparison carries
    its own statistic evaluated at its k1 per the test definition.
    """

    max_order: int
    alpha: float
    log_likelihoods: dict[int, float]
    dofs: dict[int, int]
    comparisons: list[OrderComparison] = field(default_factory=list)
    chosen_order: int = 1

    def to_dict(self) -> dict:
        return {
            "max_order": self.max_order,
            "alpha": self.alpha,
            "log_likelihoods": {str(k): v for k, v in self.log_likelihoods.items()},
            "dofs": {str(k): v for k, v in self.dofs.items()},
            "comparisons": [
                {
                    "k0": c.k0,
                    "k1": c.k1,
                    "statistic": c.statistic,
                    "delta_dof": c.delta_dof,
                    "p_value": c.p_value,
                }
                for c in self.comparisons
            ],
            "chosen_order": self.chosen_order,
        }


def analyze_orders(
    bag: WalkBag,
    s: StaticWeightedGraph,
    k_max: int,
    alpha: float = 0.01,
    node_cap: int = DEFAULT_NODE_CAP,
) -> OrderSelectionResult:
    """Run every consecutive comparison up to k_max and pick the order."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    if not (1 <= k_max <= bag.max_length):
        raise ValueError(f"need 1 <= k_max <= bag max_length, got {k_max}")
    log_ls = {k: log_likelihood(bag, k, k_max) for k in range(1, k_max + 1)}
    dofs = {k: dof(s, k, node_cap) for k in range(1, k_max + 1)}
    comparisons = [
        OrderComparison(k, k + 1, *likelihood_ratio_test(bag, s, k, k + 1, node_cap))
        for k in range(1, k_max)
    ]
    chosen = 1
    for c in comparisons:
        if c.p_value >= alpha:
            break
        chosen = c.k1
    return OrderSelectionResult(k_max, alpha, log_ls, dofs, comparisons, chosen)


def render_order_report(result: OrderSelectionResult) -> str:
    lines = [
        f"order selection up to k_max={result.max_order} at alpha={result.alpha}",
        f"{'k':>3} {'log L (eval at k_max)':>24} {'dof':>12}",
    ]
    for k in sorted(result.log_likelihoods):
        lines.append(f"{k:>3} {result.log_likelihoods[k]:>24.6f} {result.dofs[k]:>12}")
    lines.append(f"{'test':>9} {'statistic':>16} {'delta dof':>12} {'p':>12}")
    for c in result.comparisons:
        lines.append(
            f"{c.k0} vs {c.k1:>4} {c.statistic:>16.6f} {c.delta_dof:>12} {c.p_value:>12.6g}"
        )
    lines.append(f"chosen order: {result.chosen_order}")
    return "\n".join(lines)
