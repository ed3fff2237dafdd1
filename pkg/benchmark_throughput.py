#!/usr/bin/env python3
"""
Throughput benchmark

Streams a synthetic event stream through unlimited-memory EdgeBank with
`q` fixed negatives per positive and records how long negative
generation and streaming evaluation take. Nothing is asserted; the
timings land in a JSON record for comparison across machines.
"""

from __future__ import annotations

import argparse
import platform
import sys
import time
from datetime import datetime
from pathlib import Path

import numpy as np
from loguru import logger

from baselines import make_scorer
from batch_runs import write_json_atomic
from config import BENCHMARK_SETTINGS, CODE_VERSION, EVAL_SETTINGS, LOG_SETTINGS, OUTPUT_SETTINGS
from evaluation import generate_negatives, streaming_evaluate
from input_mapper import Batch, event_batches
from synthetic import random_stream


def run_benchmark(
    num_events: int = BENCHMARK_SETTINGS["num_events"],
    num_nodes: int = BENCHMARK_SETTINGS["num_nodes"],
    q: int = BENCHMARK_SETTINGS["q"],
    seed: int = BENCHMARK_SETTINGS["seed"],
    batch_size: int = EVAL_SETTINGS["batch_size"],
) -> dict:
    stream = random_stream(num_nodes=num_nodes, num_events=num_events, t_span=BENCHMARK_SETTINGS["t_span"], seed=seed)
    cut = max(1, int(num_events * BENCHMARK_SETTINGS["history_fraction"]))
    history, test = stream.slice(0, cut), stream.slice(cut, num_events)
    logger.info("benchmark: {} history events, {} test events, q={}", len(history), len(test), q)

    started = time.perf_counter()
    negatives = generate_negatives(history, test, q=q, seed=seed, num_nodes=num_nodes)
    negatives_seconds = time.perf_counter() - started

    scorer = make_scorer("edgebank-inf", num_nodes)
    scorer.observe(Batch.from_stream(history))
    batches = event_batches(test, batch_size)
    result = streaming_evaluate(scorer, batches, negatives)

    return {
        "model": "edgebank-inf",
        "num_events": num_events,
        "num_nodes": num_nodes,
        "num_positives": len(test),
        "q": q,
        "batch_size": batch_size,
        "seed": seed,
        "mrr": result.mrr,
        "negatives_seconds": negatives_seconds,
        "evaluation_seconds": result.runtime_seconds,
        "scores_per_second": len(test) * (q + 1) / max(result.runtime_seconds, 1e-9),
        "code_version": CODE_VERSION,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": datetime.now().isoformat(timespec="seconds"),
    }


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="EdgeBank streaming throughput on synthetic events")
    parser.add_argument("--events", type=int, default=BENCHMARK_SETTINGS["num_events"])
    parser.add_argument("--nodes", type=int, default=BENCHMARK_SETTINGS["num_nodes"])
    parser.add_argument("--q", type=int, default=BENCHMARK_SETTINGS["q"])
    parser.add_argument("--seed", type=int, default=BENCHMARK_SETTINGS["seed"])
    parser.add_argument("--output", default=str(Path(OUTPUT_SETTINGS["output_directory"]) / "benchmark_throughput.json"))
    args = parser.parse_args(argv)

    logger.remove()
    logger.add(sys.stderr, level=LOG_SETTINGS["level"], format=LOG_SETTINGS["format"])

    record = run_benchmark(num_events=args.events, num_nodes=args.nodes, q=args.q, seed=args.seed)
    path = write_json_atomic(record, args.output)
    print("=" * 50)
    print(f"negatives:  {record['negatives_seconds']:.1f}s")
    print(f"evaluation: {record['evaluation_seconds']:.1f}s ({record['scores_per_second']:,.0f} scores/s)")
    print(f"💾 {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
