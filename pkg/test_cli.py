import json

import pytest

from cli import main
from pipeline import RunConfig, run_single
from synthetic import random_stream


@pytest.fixture
def events_csv(tmp_path):
    stream = random_stream(num_nodes=15, num_events=300, t_span=600, seed=3)
    rows = ["src,dst,t"] + [f"{s},{d},{t}" for s, d, t in zip(stream.src.tolist(), stream.dst.tolist(), stream.t_start.tolist())]
    path = tmp_path / "events.csv"
    path.write_text("\n".join(rows) + "\n")
    return path


def without_timing(payload):
    if isinstance(payload, dict):
        return {k: without_timing(v) for k, v in payload.items() if k not in ("runtime_seconds", "timestamp")}
    if isinstance(payload, list):
        return [without_timing(v) for v in payload]
    return payload


def test_missing_file_is_a_usage_error(tmp_path, capsys):
    assert main(["stats", "--data", str(tmp_path / "missing.csv")]) == 2
    assert "error" in capsys.readouterr().err
    assert main(["eval", "--data", str(tmp_path / "missing.csv")]) == 2


def test_stats_prints_json(events_csv, capsys):
    assert main(["stats", "--data", str(events_csv), "--granularity", "60"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["dataset"] == "events"
    assert stats["edges"] == 300
    assert stats["granularity"] == "custom-60"
    assert stats["snapshots"] >= 10
    assert 0.0 <= stats["surprise"] <= 1.0


def test_stats_auto_granularity(events_csv, capsys):
    assert main(["stats", "--data", str(events_csv)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["granularity"] in ("second", "minute", "hour")
    assert stats["snapshots"] >= 1


def test_discretize_writes_a_manifest(events_csv, tmp_path):
    out = tmp_path / "snapshots.jsonl"
    assert main(["discretize", "--data", str(events_csv), "--count", "4", "--output", str(out)]) == 0
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 4
    assert sum(r["num_edges"] for r in records) == 300


def test_gen_negatives(events_csv, tmp_path):
    out_dir = tmp_path / "out"
    assert main(["gen-negatives", "--data", str(events_csv), "--q", "5", "--seed", "1", "--output-dir", str(out_dir)]) == 0
    lines = (out_dir / "negatives_events_seed1.jsonl").read_text().splitlines()
    assert len(lines) == 300 - 255
    assert all(len(json.loads(line)["negatives"]) == 5 for line in lines)

    assert main(["gen-negatives", "--data", str(events_csv), "--q", "0", "--output-dir", str(out_dir)]) == 2


def test_eval_matches_a_library_call(events_csv, tmp_path):
    out_dir = tmp_path / "out"
    report = tmp_path / "eval.json"
    assert main([
        "eval", "--data", str(events_csv), "--model", "edgebank-inf", "--q", "5", "--seed", "7",
        "--output-dir", str(out_dir), "--output", str(report),
    ]) == 0
    from_cli = json.loads(report.read_text())

    cfg = RunConfig(dataset=events_csv, model="edgebank-inf", q=5, seeds=[7], output_directory=out_dir)
    from_library = run_single(cfg, 7)
    assert from_cli["mrr"] == from_library["mrr"]
    assert from_cli["per_batch_mrr"] == from_library["per_batch_mrr"]
    assert from_cli["num_positives"] == 45


def test_edgebank_window_from_config_file(events_csv, tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("model: edgebank-tw\nwindow_rule: ratio\ntime_window_ratio: 0.1\nq: 4\n")
    report = tmp_path / "eval.json"
    assert main([
        "eval", "--data", str(events_csv), "--config", str(config),
        "--output-dir", str(tmp_path / "out"), "--output", str(report),
    ]) == 0
    record = json.loads(report.read_text())
    assert record["model"] == "edgebank-tw"
    assert record["window"] > 0
    assert record["q"] == 4


def test_train_and_evaluate_logistic(events_csv, tmp_path):
    report = tmp_path / "train.json"
    assert main([
        "train", "--data", str(events_csv), "--epochs", "2", "--lr", "0.01", "--seed", "3",
        "--output-dir", str(tmp_path / "out"), "--output", str(report),
    ]) == 0
    trained = json.loads(report.read_text())
    assert 1 <= trained["epochs_run"] <= 2
    assert len(trained["weights"]) == 5
    assert trained["manifest"]["seeds"] == [3]
    assert trained["manifest"]["config"]["model"] == "logistic"
    assert "code_version" in trained["manifest"]

    result = tmp_path / "eval.json"
    assert main([
        "eval", "--data", str(events_csv), "--model", "logistic", "--weights", str(report), "--q", "5",
        "--output-dir", str(tmp_path / "out"), "--output", str(result),
    ]) == 0
    record = json.loads(result.read_text())
    assert 0.0 < record["mrr"] <= 1.0
    assert record["weights_file"] == str(report)
    assert record["manifest"]["config"]["weights_path"] == str(report)
    assert record["manifest"]["seeds"]


def test_run_is_deterministic(events_csv, tmp_path):
    payloads = []
    for name in ("first", "second"):
        out_dir = tmp_path / name
        assert main([
            "run", "--data", str(events_csv), "--models", "edgebank-inf", "--seeds", "1", "2",
            "--q", "5", "--output-dir", str(out_dir),
        ]) == 0
        payloads.append(json.loads((out_dir / "results_edgebank-inf_streaming.json").read_text()))
        assert (out_dir / "manifest_edgebank-inf_streaming.json").is_file()
    assert without_timing(payloads[0]) == without_timing(payloads[1])
    summary = payloads[0]["summary"]
    assert summary["complete"]
    assert summary["mrr_mean"] is not None and summary["mrr_std"] is not None


def test_modes_differ_only_in_the_frozen_flag(events_csv, tmp_path):
    out_dir = tmp_path / "out"
    manifests = {}
    for mode in ("streaming", "deployed"):
        assert main([
            "run", "--data", str(events_csv), "--models", "edgebank-inf", "--seeds", "1",
            "--q", "5", "--mode", mode, "--output-dir", str(out_dir),
        ]) == 0
        manifests[mode] = json.loads((out_dir / f"manifest_edgebank-inf_{mode}.json").read_text())["config"]
    changed = {k for k in manifests["streaming"] if manifests["streaming"][k] != manifests["deployed"][k]}
    assert changed == {"mode"}
