import json
from collections import Counter

import pytest

from dbgnn import cli, parse_edge_list
from dbgnn.walks import read_walk_bag
from dbgnn.debruijn import read_debruijn

TOY_EDGES = "a b 1\nb c 2\nc a 3\na b 4\nb d 5\nd a 6\na b 7\nb c 8\n"


@pytest.fixture
def toy_edges(tmp_path):
    path = tmp_path / "toy.edges"
    path.write_text(TOY_EDGES, encoding="utf-8")
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_generate_writes_edges_and_labels(tmp_path):
    out = tmp_path / "edges.txt"
    labels = tmp_path / "labels.csv"
    rc = run("generate", "temp-clusters", "--n", 9, "--m", 30, "--pairs", 50,
             "--seed", 1, "--out", out, "--labels", labels)
    assert rc == 0
    g = parse_edge_list(out.read_text(encoding="utf-8"))
    assert g.n_nodes == 9 and g.n_events == 100
    lines = labels.read_text(encoding="utf-8").strip().split("\n")
    assert lines[0] == "node,label" and len(lines) == 10


def test_generate_unknown_dataset_is_usage_error(tmp_path):
    rc = run("generate", "nope", "--out", tmp_path / "x", "--labels", tmp_path / "y")
    assert rc == cli.EXIT_USAGE


def test_walks_then_debruijn_stage_chaining(tmp_path, toy_edges):
    bag_path = tmp_path / "bag.tsv"
    assert run("walks", toy_edges, "--delta", 1, "--max-order", 2, "--out", bag_path) == 0
    with open(bag_path, encoding="utf-8") as fh:
        bag = read_walk_bag(fh)
    assert bag.delta == 1 and bag.max_length == 2

    graph_path = tmp_path / "k2.tsv"
    assert run("debruijn", bag_path, "--order", 2, "--out", graph_path) == 0
    with open(graph_path, encoding="utf-8") as fh:
        d = read_debruijn(fh)
    assert d.order == 2
    assert d.total_weight == bag.total_of_length(2)


def test_select_order_stage(tmp_path, toy_edges, capsys):
    report = tmp_path / "report.json"
    rc = run("select-order", toy_edges, "--delta", 1, "--max-order", 2,
             "--alpha", "0.01", "--json", report)
    assert rc == 0
    assert "chosen order" in capsys.readouterr().out
    payload = json.loads(report.read_text(encoding="utf-8"))
    assert payload["chosen_order"] in (1, 2)
    assert set(payload["log_likelihoods"]) == {"1", "2"}


def test_shuffle_stage_preserves_multisets(tmp_path, toy_edges):
    out = tmp_path / "shuffled.edges"
    assert run("shuffle", toy_edges, "--seed", 7, "--out", out) == 0
    orig = parse_edge_list(TOY_EDGES)
    shuf = parse_edge_list(out.read_text(encoding="utf-8"))
    assert Counter(e.timestamp for e in orig.events) == Counter(
        e.timestamp for e in shuf.events
    )


def test_ingest_applies_binning_and_dedup(tmp_path):
    path = tmp_path / "raw.edges"
    path.write_text("a b 20\na b 899\nb c 1000\n", encoding="utf-8")
    out = tmp_path / "cooked.edges"
    rc = run("ingest", path, "--bin-width", 900, "--dedup-bins", "--out", out)
    assert rc == 0
    g = parse_edge_list(out.read_text(encoding="utf-8"))
    assert g.n_events == 2  # duplicate contact inside bin 0 dropped
    assert sorted(e.timestamp for e in g.events) == [0, 1]


def test_missing_input_file_is_data_error(tmp_path):
    rc = run("walks", tmp_path / "absent.edges", "--delta", 1, "--max-order", 2,
             "--out", tmp_path / "bag.tsv")
    assert rc == cli.EXIT_DATA


def test_malformed_input_is_data_error(tmp_path):
    path = tmp_path / "bad.edges"
    path.write_text("a b not-a-number\n", encoding="utf-8")
    rc = run("ingest", path, "--out", tmp_path / "out.edges")
    assert rc == cli.EXIT_DATA


def test_usage_error_exit_code():
    assert run("walks") == cli.EXIT_USAGE


def test_train_evaluate_embed_roundtrip(tmp_path):
    edges = tmp_path / "edges.txt"
    labels = tmp_path / "labels.csv"
    run("generate", "temp-clusters", "--n", 9, "--m", 40, "--pairs", 300,
        "--seed", 2, "--out", edges, "--labels", labels)
    ckpt = tmp_path / "model.npz"
    metrics = tmp_path / "metrics.json"
    rc = run("train", edges, "--labels", labels, "--delta", 1, "--order", 2,
             "--epochs", 25, "--first-hidden", 8, "--representation-dim", 8,
             "--seed", 3, "--out", ckpt, "--metrics", metrics)
    assert rc == 0
    payload = json.loads(metrics.read_text(encoding="utf-8"))
    assert 0.0 <= payload["balanced_accuracy"] <= 1.0

    assert run("evaluate", ckpt, "--json", tmp_path / "eval.json") == 0
    eval_payload = json.loads((tmp_path / "eval.json").read_text(encoding="utf-8"))
    assert eval_payload == payload

    emb = tmp_path / "emb.csv"
    assert run("embed", ckpt, "--out", emb) == 0
    lines = emb.read_text(encoding="utf-8").strip().split("\n")
    assert len(lines) == 10  # header + 9 nodes


def test_pipeline_on_synthetic_preset_is_deterministic(tmp_path):
    def run_pipeline(out_dir):
        rc = run("pipeline", "--preset", "temp-clusters", "--n", 9, "--m", 40,
                 "--pairs", 250, "--epochs", 20, "--runs", 1, "--seed", 5,
                 "--first-hidden", 8, "--representation-dim", 8,
                 "--out-dir", out_dir)
        assert rc == 0

    run_pipeline(tmp_path / "a")
    run_pipeline(tmp_path / "b")
    for name in ("metrics.json", "order_selection.json", "embeddings.csv", "walks.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    order_report = json.loads((tmp_path / "a" / "order_selection.json").read_text())
    assert order_report["chosen_order"] >= 1
    assert (tmp_path / "a" / "model.npz").exists()


def test_pipeline_config_file_and_env_override(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "preset = temp-clusters\nn = 9\nm = 40\npairs = 200\nepochs = 10\n"
        "runs = 1\nseed = 1\nfirst_hidden = 8\nrepresentation_dim = 8\n"
        f"out_dir = {tmp_path / 'cfg_out'}\n",
        encoding="utf-8",
    )
    monkeypatch.setenv("DBGNN_EPOCHS", "5")
    assert run("pipeline", "--config", cfg) == 0
    assert (tmp_path / "cfg_out" / "metrics.json").exists()


def test_pipeline_empirical_preset_requires_input():
    assert run("pipeline", "--preset", "workplace") == cli.EXIT_USAGE


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    from dbgnn.experiment import TrainingDivergedError

    def boom(*args, **kwargs):
        raise TrainingDivergedError("non-finite loss at epoch 0")

    monkeypatch.setattr(cli.exp, "train", boom)
    rc = run("pipeline", "--preset", "temp-clusters", "--n", 9, "--m", 40,
             "--pairs", 100, "--epochs", 5, "--runs", 1,
             "--first-hidden", 4, "--representation-dim", 4,
             "--out-dir", tmp_path / "boom")
    assert rc == cli.EXIT_NUMERIC


def test_help_exits_zero():
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0


def test_gcn_method_checkpoint_roundtrip(tmp_path):
    edges = tmp_path / "edges.txt"
    labels = tmp_path / "labels.csv"
    run("generate", "temp-clusters", "--n", 9, "--m", 40, "--pairs", 200,
        "--seed", 4, "--out", edges, "--labels", labels)
    ckpt = tmp_path / "gcn.ckpt"  # non-.npz name must be kept verbatim
    rc = run("train", edges, "--labels", labels, "--delta", 1, "--order", 2,
             "--method", "gcn", "--epochs", 10, "--first-hidden", 4,
             "--representation-dim", 4, "--out", ckpt)
    assert rc == 0
    assert ckpt.exists()
    assert run("evaluate", ckpt) == 0
    assert run("embed", ckpt, "--out", tmp_path / "gcn_emb.csv") == 0


def test_unknown_config_key_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("not_a_key = 1\n", encoding="utf-8")
    assert run("pipeline", "--config", cfg) == cli.EXIT_USAGE
