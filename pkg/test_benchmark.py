import json

import pytest

from benchmark_throughput import main, run_benchmark


def test_small_benchmark_record():
    record = run_benchmark(num_events=2000, num_nodes=300, q=20, seed=1)
    assert record["num_positives"] == 1800
    assert record["q"] == 20
    assert 0.0 < record["mrr"] <= 1.0
    assert record["negatives_seconds"] >= 0.0
    assert record["evaluation_seconds"] >= 0.0


def test_benchmark_writes_json(tmp_path):
    out = tmp_path / "bench.json"
    assert main(["--events", "1000", "--nodes", "200", "--q", "10", "--output", str(out)]) == 0
    record = json.loads(out.read_text())
    assert record["model"] == "edgebank-inf"
    assert record["num_events"] == 1000


@pytest.mark.slow
def test_full_size_throughput(tmp_path):
    out = tmp_path / "bench.json"
    assert main(["--output", str(out)]) == 0
    record = json.loads(out.read_text())
    assert record["num_events"] == 500_000
    assert record["q"] == 100
