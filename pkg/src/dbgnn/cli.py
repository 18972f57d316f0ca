"""Command-line interface: single pipeline runs and individual stages.

Configuration precedence for the pipeline: CLI flags > DBGNN_* environment
variables > config file (flat `key = value` lines) > preset > defaults.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import debruijn as db
from . import experiment as exp
from . import model as mdl
from . import order_selection as osel
from . import synthetic, temporal, walks as wk

ENV_PREFIX = "DBGNN_"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

PRESETS: dict[str, dict] = {
    # synthetic planted-cluster graph, delta=1, directed
    "temp-clusters": dict(directed=True, delta=1, bin_width=1, max_order=2,
                          n=30, m=560, pairs=30000),
    # SMS network, five-minute native resolution, delta of 200 minutes
    "student-sms": dict(directed=True, delta=40, bin_width=1, max_order=2),
    # proximity networks: 20 s native resolution, 15 min bins, delta of 1 h
    "workplace": dict(directed=False, delta=4, bin_width=900, max_order=2),
    "hospital": dict(directed=False, delta=4, bin_width=900, max_order=2),
    "high-school-2011": dict(directed=False, delta=4, bin_width=900, max_order=2),
    "high-school-2012": dict(directed=False, delta=4, bin_width=900, max_order=2),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's default 2
        raise UsageError(message)


@dataclass
class PipelineConfig:
    input: str = ""
    labels: str = ""
    out_dir: str = "out"
    preset: str = ""
    directed: bool = True
    bin_width: int = 1
    dedup_bins: bool = False
    delta: int = 1
    max_order: int = 2
    alpha: float = 0.01
    order: int = 0  # 0 = use the selected order
    method: str = "dbgnn"
    first_hidden: int = 16
    representation_dim: int = 16
    aggregator: str = "sum"
    lr: float = 0.001
    epochs: int = 5000
    train_fraction: float = 0.7
    runs: int = 1
    seed: int = 0
    threads: int = 0
    # synthetic generation parameters (used when no input file is given)
    n: int = 30
    m: int = 560
    pairs: int = 30000


def _coerce(value: str, target_type):
    if target_type is bool:
        v = value.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {value!r}")
    return target_type(value)


def load_config_file(path: str) -> dict[str, str]:
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise temporal.ParseError(f"expected key = value, got {line!r}", lineno)
            key, value = line.split("=", 1)
            pairs[key.strip().lower().replace("-", "_")] = value.strip()
    return pairs


def resolve_pipeline_config(args) -> PipelineConfig:
    types = {name: type(value) for name, value in vars(PipelineConfig()).items()}
    values: dict = {}

    preset = getattr(args, "preset", None) or ""
    file_pairs = load_config_file(args.config) if getattr(args, "config", None) else {}
    if not preset and "preset" in file_pairs:
        preset = file_pairs["preset"]
    if preset:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[preset])
        values["preset"] = preset
    for key, raw in file_pairs.items():
        if key == "preset":
            continue
        if key not in types:
            raise UsageError(f"unknown config key {key!r}")
        values[key] = _coerce(raw, types[key])
    for key in types:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            values[key] = _coerce(env, types[key])
    for key in types:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return PipelineConfig(**values)


def _limit_threads(n: int):
    if n and n > 0:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=n)


def _load_graph(cfg: PipelineConfig) -> tuple[temporal.TemporalGraph, np.ndarray | None]:
    """Load (or synthesize) the temporal graph and node labels."""
    if cfg.input:
        with open(cfg.input, encoding="utf-8") as fh:
            g = temporal.parse_edge_list(fh, directed=cfg.directed)
        g = temporal.coarsen(g, cfg.bin_width)
        if cfg.dedup_bins:
            g = temporal.dedup_events(g)
        labels = None
        if cfg.labels:
            with open(cfg.labels, encoding="utf-8") as fh:
                labels, _ = exp.read_labels(fh, g.node_labels)
        return g, labels
    if cfg.preset and cfg.preset != "temp-clusters":
        raise UsageError(f"preset {cfg.preset!r} needs an input file (user-supplied data)")
    g, assignment = synthetic.generate_temp_clusters(cfg.n, cfg.m, cfg.pairs, seed=cfg.seed)
    return g, np.array(assignment.clusters, dtype=np.int64)


def cmd_pipeline(args) -> int:
    cfg = resolve_pipeline_config(args)
    _limit_threads(cfg.threads)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    g, labels = _load_graph(cfg)
    if labels is None:
        raise UsageError("the pipeline needs node labels (--labels or a synthetic dataset)")
    print(f"[ingest] {g}")

    bag = wk.count_causal_walks(g, cfg.delta, cfg.max_order)
    with open(out / "walks.tsv", "w", encoding="utf-8") as fh:
        wk.write_walk_bag(bag, fh)
    static = temporal.aggregate(g)

    report = osel.analyze_orders(bag, static, cfg.max_order, cfg.alpha)
    with open(out / "order_selection.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "order_selection.txt", "w", encoding="utf-8") as fh:
        fh.write(osel.render_order_report(report) + "\n")
    order = cfg.order if cfg.order > 0 else report.chosen_order
    print(f"[select-order] chosen order k={report.chosen_order}"
          + (f" (overridden to k={order})" if order != report.chosen_order else ""))

    ho = db.build_debruijn(bag, order)
    with open(out / f"debruijn_k{order}.tsv", "w", encoding="utf-8") as fh:
        db.write_debruijn(ho, fh)
    print(f"[debruijn] order {order}: {ho.n_nodes} nodes, {ho.n_edges} edges")

    dataset = exp.Dataset(static, ho)
    tc = exp.TrainConfig(labels, lr=cfg.lr, epochs=cfg.epochs,
                         train_fraction=cfg.train_fraction, seed=cfg.seed, runs=cfg.runs)
    result = exp.run_experiment(
        dataset, cfg.method, tc,
        first_hidden=cfg.first_hidden,
        representation_dim=cfg.representation_dim,
        aggregator=cfg.aggregator,
    )
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    # one final model for the checkpoint and the embedding export
    model, train_mask, test_mask = _train_single(dataset, cfg, labels)
    _save_checkpoint(out / "model.npz", model, cfg, dataset, labels, train_mask, test_mask)
    with open(out / "embeddings.csv", "w", encoding="utf-8") as fh:
        exp.export_embeddings(model, static.node_labels, fh)

    mean = result.mean
    print(f"[train] {cfg.method}, {cfg.runs} run(s), {cfg.epochs} epochs")
    print(f"[metrics] balanced accuracy {mean['balanced_accuracy']:.4f}, "
          f"f1 macro {mean['f1_macro']:.4f}")
    print(f"[done] artifacts in {out}")
    return EXIT_OK


def _train_single(dataset, cfg: PipelineConfig, labels):
    split_stream, init_stream = np.random.SeedSequence(cfg.seed).spawn(2)
    train_mask, test_mask = exp.split(labels, cfg.train_fraction, split_stream)
    model = exp.build_model(
        dataset, cfg.method, int(labels.max()) + 1,
        first_hidden=cfg.first_hidden,
        representation_dim=cfg.representation_dim,
        aggregator=cfg.aggregator,
        seed=init_stream,
    )
    tc = exp.TrainConfig(labels, lr=cfg.lr, epochs=cfg.epochs,
                         train_fraction=cfg.train_fraction, seed=cfg.seed, runs=1)
    exp.train(model, tc, train_mask)
    return model, train_mask, test_mask


CHECKPOINT_VERSION = 1


def _save_checkpoint(path, model, cfg: PipelineConfig, dataset, labels, train_mask, test_mask):
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "method": cfg.method,
        "order": dataset.ho_graph.order,
        "aggregator": cfg.aggregator,
        "first_hidden": cfg.first_hidden,
        "representation_dim": cfg.representation_dim,
        "n_classes": int(labels.max()) + 1,
        "directed": dataset.fo_graph.directed,
    }
    arrays = {
        "meta_json": np.array(json.dumps(meta, sort_keys=True)),
        "node_labels": np.array(dataset.fo_graph.node_labels),
        "labels": labels,
        "train_mask": train_mask,
        "test_mask": test_mask,
        "fo_edges": np.array(
            [(u, v, w) for (u, v), w in sorted(dataset.fo_graph.weights.items())],
            dtype=np.int64,
        ),
        "ho_nodes": np.array(dataset.ho_graph.ho_nodes, dtype=np.int64),
        "ho_edges": np.array(
            [(u, v, w) for (u, v), w in sorted(dataset.ho_graph.edges.items())],
            dtype=np.int64,
        ),
    }
    for name, p in model.params.items():
        arrays[f"param_{name}"] = p
    with open(path, "wb") as fh:  # keep the exact filename, no .npz appended
        np.savez(fh, **arrays)


def _load_checkpoint(path):
    data = np.load(path, allow_pickle=False)
    meta = json.loads(str(data["meta_json"]))
    if meta["format_version"] != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {meta['format_version']}")
    node_labels = [str(x) for x in data["node_labels"]]
    fo_weights = {(int(u), int(v)): int(w) for u, v, w in data["fo_edges"]}
    fo_graph = temporal.StaticWeightedGraph(node_labels, fo_weights, directed=meta["directed"])
    ho_nodes = tuple(tuple(int(x) for x in row) for row in data["ho_nodes"])
    ho_edges = {(int(u), int(v)): int(w) for u, v, w in data["ho_edges"]}
    ho_graph = db.DeBruijnGraph(meta["order"], ho_nodes, ho_edges, node_labels)
    dataset = exp.Dataset(fo_graph, ho_graph)
    labels = data["labels"]
    model = exp.build_model(
        dataset, meta["method"], meta["n_classes"],
        first_hidden=meta["first_hidden"],
        representation_dim=meta["representation_dim"],
        aggregator=meta["aggregator"],
    )
    for name in model.params:
        model.params[name] = data[f"param_{name}"]
    return model, dataset, labels, data["train_mask"], data["test_mask"], meta


def cmd_generate(args) -> int:
    if args.dataset != "temp-clusters":
        raise UsageError(f"unknown synthetic dataset {args.dataset!r}")
    g, assignment = synthetic.generate_temp_clusters(args.n, args.m, args.pairs, seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        temporal.write_edge_list(g, fh)
    with open(args.labels, "w", encoding="utf-8") as fh:
        exp.write_labels(g.node_labels, assignment.clusters, fh)
    print(f"[generate] {g} -> {args.out}, labels -> {args.labels}")
    return EXIT_OK


def cmd_shuffle(args) -> int:
    g = _read_graph(args)
    shuffled = synthetic.shuffle_timestamps(g, seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        temporal.write_edge_list(shuffled, fh)
    print(f"[shuffle] permuted {g.n_events} timestamps -> {args.out}")
    return EXIT_OK


def _read_graph(args) -> temporal.TemporalGraph:
    with open(args.edges, encoding="utf-8") as fh:
        g = temporal.parse_edge_list(fh, directed=args.directed)
    if getattr(args, "bin_width", 1) != 1:
        g = temporal.coarsen(g, args.bin_width)
    if getattr(args, "dedup_bins", False):
        g = temporal.dedup_events(g)
    return g


def cmd_ingest(args) -> int:
    g = _read_graph(args)
    with open(args.out, "w", encoding="utf-8") as fh:
        temporal.write_edge_list(g, fh)
    static = temporal.aggregate(g)
    print(f"[ingest] {g}; aggregated: {static.n_edges} edges, "
          f"total weight {static.total_weight}")
    return EXIT_OK


def cmd_walks(args) -> int:
    g = _read_graph(args)
    bag = wk.count_causal_walks(g, args.delta, args.max_order)
    with open(args.out, "w", encoding="utf-8") as fh:
        wk.write_walk_bag(bag, fh)
    for length in range(1, args.max_order + 1):
        print(f"[walks] length {length}: {bag.total_of_length(length)} instantiations, "
              f"{len(bag.of_length(length))} distinct")
    return EXIT_OK


def cmd_debruijn(args) -> int:
    with open(args.bag, encoding="utf-8") as fh:
        bag = wk.read_walk_bag(fh)
    d = db.build_debruijn(bag, args.order)
    with open(args.out, "w", encoding="utf-8") as fh:
        db.write_debruijn(d, fh)
    print(f"[debruijn] order {args.order}: {d.n_nodes} nodes, {d.n_edges} edges")
    return EXIT_OK


def cmd_select_order(args) -> int:
    g = _read_graph(args)
    bag = wk.count_causal_walks(g, args.delta, args.max_order)
    static = temporal.aggregate(g)
    report = osel.analyze_orders(bag, static, args.max_order, args.alpha)
    print(osel.render_order_report(report))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = PipelineConfig(
        input=args.edges, labels=args.labels, directed=args.directed,
        bin_width=args.bin_width, dedup_bins=args.dedup_bins, delta=args.delta,
        max_order=args.max_order, alpha=args.alpha, order=args.order,
        method=args.method, first_hidden=args.first_hidden,
        representation_dim=args.representation_dim, aggregator=args.aggregator,
        lr=args.lr, epochs=args.epochs, train_fraction=args.train_fraction,
        seed=args.seed,
    )
    g, labels = _load_graph(cfg)
    if labels is None:
        raise UsageError("train needs a labels file")
    bag = wk.count_causal_walks(g, cfg.delta, cfg.max_order)
    static = temporal.aggregate(g)
    order = cfg.order
    if order == 0:
        order = osel.select_order(bag, static, cfg.max_order, cfg.alpha)
        print(f"[select-order] k={order}")
    dataset = exp.Dataset(static, db.build_debruijn(bag, order))
    model, train_mask, test_mask = _train_single(dataset, cfg, labels)
    _save_checkpoint(args.out, model, cfg, dataset, labels, train_mask, test_mask)
    metrics = exp.evaluate(model, test_mask, labels)
    print(f"[train] test balanced accuracy {metrics.balanced_accuracy:.4f}")
    if args.metrics:
        with open(args.metrics, "w", encoding="utf-8") as fh:
            json.dump(metrics.as_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model, _, labels, _, test_mask, _ = _load_checkpoint(args.checkpoint)
    metrics = exp.evaluate(model, test_mask, labels)
    payload = metrics.as_dict()
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_embed(args) -> int:
    model, dataset, _, _, _, _ = _load_checkpoint(args.checkpoint)
    with open(args.out, "w", encoding="utf-8") as fh:
        exp.export_embeddings(model, dataset.fo_graph.node_labels, fh,
                              include_pca=not args.no_pca)
    print(f"[embed] wrote {dataset.fo_graph.n_nodes} embeddings -> {args.out}")
    return EXIT_OK


def _add_graph_io_flags(p, bin_width_default=1):
    p.add_argument("edges", help="edge list file (source target timestamp per line)")
    dir_group = p.add_mutually_exclusive_group()
    dir_group.add_argument("--directed", dest="directed", action="store_true", default=True)
    dir_group.add_argument("--undirected", dest="directed", action="store_false")
    p.add_argument("--bin-width", type=int, default=bin_width_default,
                   help="coarsen timestamps to floor(t / bin_width)")
    p.add_argument("--dedup-bins", action="store_true",
                   help="drop duplicate contacts inside one bin")


def build_parser() -> _Parser:
    parser = _Parser(prog="dbgnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="full run: ingest, walks, order selection, "
                                        "De Bruijn graph, training, export")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--input")
    p.add_argument("--labels")
    p.add_argument("--out-dir", dest="out_dir")
    dir_group = p.add_mutually_exclusive_group()
    dir_group.add_argument("--directed", dest="directed", action="store_const", const=True,
                           default=None)
    dir_group.add_argument("--undirected", dest="directed", action="store_const", const=False)
    p.add_argument("--bin-width", dest="bin_width", type=int)
    p.add_argument("--dedup-bins", dest="dedup_bins", action="store_const", const=True,
                   default=None)
    p.add_argument("--delta", type=int)
    p.add_argument("--max-order", dest="max_order", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--order", type=int, help="force this De Bruijn order (0 = selected)")
    p.add_argument("--method", choices=("dbgnn", "gcn"))
    p.add_argument("--first-hidden", dest="first_hidden", type=int)
    p.add_argument("--representation-dim", dest="representation_dim", type=int)
    p.add_argument("--aggregator", choices=mdl.AGGREGATORS)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="cap BLAS thread pools")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--pairs", type=int)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("generate", help="generate a synthetic dataset")
    p.add_argument("dataset", help="dataset name (temp-clusters)")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--m", type=int, default=560)
    p.add_argument("--pairs", type=int, default=30000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("shuffle", help="randomly permute timestamps")
    _add_graph_io_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shuffle)

    p = sub.add_parser("ingest", help="parse, coarsen and normalize an edge list")
    _add_graph_io_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("walks", help="count causal walks")
    _add_graph_io_flags(p)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--max-order", dest="max_order", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_walks)

    p = sub.add_parser("debruijn", help="build a De Bruijn graph from a walk bag")
    p.add_argument("bag", help="walk bag file written by the walks stage")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_debruijn)

    p = sub.add_parser("select-order", help="likelihood-ratio order selection")
    _add_graph_io_flags(p)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--max-order", dest="max_order", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_select_order)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _add_graph_io_flags(p)
    p.add_argument("--labels", required=True)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--max-order", dest="max_order", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--order", type=int, default=0)
    p.add_argument("--method", choices=("dbgnn", "gcn"), default="dbgnn")
    p.add_argument("--first-hidden", dest="first_hidden", type=int, default=16)
    p.add_argument("--representation-dim", dest="representation_dim", type=int, default=16)
    p.add_argument("--aggregator", choices=mdl.AGGREGATORS, default="sum")
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--epochs", type=int, default=5000)
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint file (.npz)")
    p.add_argument("--metrics", help="write test metrics as JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on its test split")
    p.add_argument("checkpoint")
    p.add_argument("--json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("embed", help="export bipartite-layer embeddings as CSV")
    p.add_argument("checkpoint")
    p.add_argument("--out", required=True)
    p.add_argument("--no-pca", action="store_true")
    p.set_defaults(func=cmd_embed)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except exp.TrainingDivergedError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except np.linalg.LinAlgError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (temporal.ParseError, db.FeasibilityCapError, FileNotFoundError,
            IsADirectoryError, PermissionError, ValueError, KeyError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
