"""Training loop, evaluation protocol, and embedding export.

Full-batch training with masked softmax cross-entropy and Adam, stratified
70-30 splits, and classification metrics on the test nodes: balanced
accuracy (mean per-class recall) plus macro-averaged precision, recall and
F1. Experiments repeat over runs with per-run seeds that drive the split
and the weight initialization through independent streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from .debruijn import DeBruijnGraph
from .model import DbgnnConfig, DbgnnModel, GcnBaseline
from .numerics import AdamState, adam_step, softmax_cross_entropy
from .temporal import StaticWeightedGraph

METRIC_FIELDS = ("balanced_accuracy", "precision_macro", "recall_macro", "f1_macro")


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass
class TrainConfig:
    """Protocol of one experiment: optimizer settings, split fraction,
    repetition count, and the class label of every node."""

    labels: np.ndarray
    lr: float = 0.001
    epochs: int = 5000
    train_fraction: float = 0.7
    seed: int = 0
    runs: int = 50

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ValueError("labels must be one label per node")
        if self.labels.min(initial=0) < 0:
            raise ValueError("labels must be non-negative class indices")
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must be in (0, 1)")
        if self.epochs < 0 or self.runs < 1:
            raise ValueError("need epochs >= 0 and runs >= 1")

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1


@dataclass(frozen=True)
class Metrics:
    balanced_accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float

    def as_dict(self) -> dict[str, float]:
        return {f: getattr(self, f) for f in METRIC_FIELDS}


@dataclass
class Dataset:
    """Frozen graph structures one classification experiment runs on."""

    fo_graph: StaticWeightedGraph
    ho_graph: DeBruijnGraph


def split(labels, train_fraction: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """Stratified random split into boolean (train, test) masks.

    Per-class train counts follow the largest-remainder rule so the total
    matches round(train_fraction * n) while every class stays within one
    node of its target fraction. A class that would end up with an empty
    test side gives one node back from train.
    """
    labels = np.asarray(labels)
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must be in (0, 1)")
    n = labels.shape[0]
    rng = np.random.default_rng(seed)
    classes = np.unique(labels)
    total_target = int(math.floor(train_fraction * n + 0.5))
    base = {}
    remainder = {}
    for c in classes:
        exact = train_fraction * int((labels == c).sum())
        base[c] = int(math.floor(exact))
        remainder[c] = exact - base[c]
    extras = total_target - sum(base.values())
    order = sorted(classes, key=lambda c: (-remainder[c], c))
    for c in order[:extras]:
        base[c] += 1

    train_mask = np.zeros(n, dtype=bool)
    for c in classes:
        idx = np.flatnonzero(labels == c)
        perm = rng.permutation(idx.size)
        n_train = base[c]
        if n_train == idx.size:  # keep at least one test node per class
            n_train -= 1
        train_mask[idx[perm[:n_train]]] = True
    return train_mask, ~train_mask


def train(model, config: TrainConfig, train_mask: np.ndarray):
    """Full-batch training for config.epochs; returns the model and the
    per-epoch loss trace. Aborts on a non-finite loss."""
    state = AdamState(lr=config.lr)
    losses: list[float] = []
    for epoch in range(config.epochs):
        fp = model.forward(keep_cache=True)
        loss, dlogits = softmax_cross_entropy(fp.logits, config.labels, train_mask)
        if not math.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
        grads = model.backward(fp, dlogits)
        model.params = adam_step(state, model.params, grads)
        losses.append(loss)
    return model, losses


def metrics_from_predictions(y_true, y_pred, n_classes: int) -> Metrics:
    """Metrics from label/prediction pairs.

    Balanced accuracy averages recall over the classes present in y_true;
    macro metrics average over all classes with zero-division treated as 0.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.size == 0:
        raise ValueError("empty evaluation set")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)
    return metrics_from_confusion(confusion)


def metrics_from_confusion(confusion: np.ndarray) -> Metrics:
    confusion = np.asarray(confusion)
    diag = np.diag(confusion).astype(float)
    true_totals = confusion.sum(axis=1).astype(float)
    pred_totals = confusion.sum(axis=0).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        recall = np.where(true_totals > 0, diag / true_totals, 0.0)
        precision = np.where(pred_totals > 0, diag / pred_totals, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)
    present = true_totals > 0
    return Metrics(
        balanced_accuracy=float(recall[present].mean()),
        precision_macro=float(precision.mean()),
        recall_macro=float(recall.mean()),
        f1_macro=float(f1.mean()),
    )


def evaluate(model, test_mask: np.ndarray, labels: np.ndarray) -> Metrics:
    """Argmax predictions of the model on the test nodes."""
    test_mask = np.asarray(test_mask, dtype=bool)
    if not test_mask.any():
        raise ValueError("empty test mask")
    labels = np.asarray(labels)
    preds = model.forward().logits.argmax(axis=1)
    n_classes = int(labels.max()) + 1
    return metrics_from_predictions(labels[test_mask], preds[test_mask], n_classes)


def export_embeddings(
    model, node_labels: Sequence[str], sink: TextIO, include_pca: bool = True
) -> np.ndarray:
    """Write the bipartite-layer representation of every node as CSV, with
    an optional 2-component principal-component projection appended."""
    emb = model.forward().h_b
    d = emb.shape[1]
    pcs = None
    if include_pca:
        centered = emb - emb.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        comps = vt[: min(2, vt.shape[0])]
        # fix the sign convention so exports are reproducible
        for row in comps:
            if row[np.argmax(np.abs(row))] < 0:
                row *= -1.0
        pcs = centered @ comps.T
    header = ["node"] + [f"e{i}" for i in range(d)]
    if pcs is not None:
        header += [f"pc{i + 1}" for i in range(pcs.shape[1])]
    sink.write(",".join(header) + "\n")
    for i, lab in enumerate(node_labels):
        row = [lab] + [f"{x:.12g}" for x in emb[i]]
        if pcs is not None:
            row += [f"{x:.12g}" for x in pcs[i]]
        sink.write(",".join(row) + "\n")
    return emb


@dataclass
class ExperimentResult:
    method: str
    per_run: list[Metrics] = field(default_factory=list)

    @property
    def mean(self) -> dict[str, float]:
        return {
            f: float(np.mean([getattr(m, f) for m in self.per_run])) for f in METRIC_FIELDS
        }

    @property
    def std(self) -> dict[str, float]:
        return {
            f: float(np.std([getattr(m, f) for m in self.per_run])) for f in METRIC_FIELDS
        }

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "runs": [m.as_dict() for m in self.per_run],
            "mean": self.mean,
            "std": self.std,
        }


def build_model(
    dataset: Dataset,
    method: str,
    n_classes: int,
    first_hidden: int = 16,
    representation_dim: int = 16,
    aggregator: str = "sum",
    seed=0,
):
    if method == "dbgnn":
        cfg = DbgnnConfig.for_graphs(
            dataset.ho_graph,
            dataset.fo_graph,
            n_classes,
            first_hidden=first_hidden,
            representation_dim=representation_dim,
            aggregator=aggregator,
            seed=seed,
        )
        return DbgnnModel(cfg, dataset.ho_graph, dataset.fo_graph)
    if method == "gcn":
        dims = [dataset.fo_graph.n_nodes, first_hidden, representation_dim]
        return GcnBaseline(dims, n_classes, dataset.fo_graph, seed=seed)
    raise ValueError(f"unknown method {method!r}")


def run_experiment(
    dataset: Dataset,
    method: str,
    config: TrainConfig,
    first_hidden: int = 16,
    representation_dim: int = 16,
    aggregator: str = "sum",
) -> ExperimentResult:
    """Repeat split / init / train / evaluate over config.runs runs with
    per-run seeds config.seed + r and aggregate mean and std."""
    result = ExperimentResult(method)
    for r in range(config.runs):
        split_stream, init_stream = np.random.SeedSequence(config.seed + r).spawn(2)
        train_mask, test_mask = split(config.labels, config.train_fraction, split_stream)
        model = build_model(
            dataset,
            method,
            config.n_classes,
            first_hidden=first_hidden,
            representation_dim=representation_dim,
            aggregator=aggregator,
            seed=init_stream,
        )
        train(model, config, train_mask)
        result.per_run.append(evaluate(model, test_mask, config.labels))
    return result


def read_labels(source: TextIO | Sequence[str], node_labels: Sequence[str]):
    """Read a `node,label` CSV into an integer label array aligned with the
    node order; class names are mapped to indices in sorted order."""
    raw: dict[str, str] = {}
    for line in source:
        line = line.strip()
        if not line or line.startswith("#") or line.lower().startswith("node,"):
            continue
        node, label = line.split(",", 1)
        raw[node.strip()] = label.strip()
    missing = [lab for lab in node_labels if lab not in raw]
    if missing:
        raise ValueError(f"labels missing for nodes: {missing[:5]}")
    class_names = sorted(set(raw.values()))
    class_index = {c: i for i, c in enumerate(class_names)}
    labels = np.array([class_index[raw[lab]] for lab in node_labels], dtype=np.int64)
    return labels, class_names


def write_labels(node_labels: Sequence[str], labels, sink: TextIO) -> None:
    sink.write("node,label\n")
    for lab, y in zip(node_labels, labels):
        sink.write(f"{lab},{y}\n")
