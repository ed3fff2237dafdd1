#!/usr/bin/env python3
"""
Batch runs over several seeds

Runs the evaluation pipeline for one model once per root seed, keeps
going when a seed fails (the error is recorded in its place), aggregates
mean and standard deviation of MRR, and saves the results together with
a manifest sufficient to re-run the batch.
"""

import json
import os
import tempfile
from datetime import datetime
from pathlib import Path

import numpy as np
from loguru import logger
from tqdm import tqdm

from config import OUTPUT_SETTINGS
from pipeline import RunConfig, load_splits, run_single


def write_json_atomic(payload, path):
    """Write JSON next to `path` first, then move it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=OUTPUT_SETTINGS["json_indent"], sort_keys=True)
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


class BatchRunManager:
    def __init__(self, config: RunConfig, progress=False):
        self.config = config
        self.seeds = list(config.seeds)
        self.results = {}
        self.progress = progress

    def add_seed(self, seed):
        """Add a root seed to the batch"""
        if seed not in self.seeds:
            self.seeds.append(int(seed))

    def set_seeds_from_list(self, seeds):
        self.seeds = [int(s) for s in seeds]

    def run_single_seed(self, seed, stream_and_splits=None):
        """Run the pipeline for one seed; failures are recorded, not raised"""
        try:
            record = run_single(self.config, seed, stream_and_splits)
            self.results[seed] = record
            print(f"✓ {self.config.model} seed {seed}: MRR = {record['mrr']:.4f}")
            return record
        except Exception as e:
            error_msg = f"{type(e).__name__}: {e}"
            logger.exception("seed {} failed", seed)
            print(f"✗ {self.config.model} seed {seed}: {error_msg}")
            self.results[seed] = {"seed": seed, "error": error_msg}
            return None

    def run_batch(self):
        """Run every seed on one parsed copy of the dataset"""
        print(f"Running {self.config.model} ({self.config.mode}) on {self.config.dataset_name}")
        print(f"Seeds: {', '.join(map(str, self.seeds))}")
        print("=" * 50)

        stream_and_splits = load_splits(self.config)
        for seed in tqdm(self.seeds, desc="seeds", disable=not self.progress):
            self.run_single_seed(seed, stream_and_splits)

        print("=" * 50)
        summary = self.generate_summary()
        if summary["successful_runs"]:
            print(f"MRR: {summary['mrr_mean']:.4f} ± {summary['mrr_std']:.4f} over {summary['successful_runs']} seed(s)")
        return summary

    def generate_summary(self):
        """Aggregate MRR over the seeds that succeeded"""
        mrrs = [r["mrr"] for r in self.results.values() if "error" not in r]
        failed = sorted(seed for seed, r in self.results.items() if "error" in r)
        return {
            "total_seeds": len(self.seeds),
            "successful_runs": len(mrrs),
            "failed_runs": len(failed),
            "failed_seeds": failed,
            "mrr_mean": float(np.mean(mrrs)) if mrrs else None,
            "mrr_std": float(np.std(mrrs)) if mrrs else None,
            "complete": not failed and len(mrrs) == len(self.seeds),
        }

    def results_path(self):
        return self.config.output_directory / f"results_{self.config.model}_{self.config.mode}.json"

    def manifest_path(self):
        return self.config.output_directory / f"manifest_{self.config.model}_{self.config.mode}.json"

    def save_batch_results(self):
        """Save the per-seed records, the summary and the run manifest"""
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        payload = {
            "model": self.config.model,
            "dataset": self.config.dataset_name,
            "mode": self.config.mode,
            "timestamp": timestamp,
            "seeds": self.seeds,
            "results": [self.results[s] for s in self.seeds if s in self.results],
            "summary": self.generate_summary(),
        }
        path = write_json_atomic(payload, self.results_path())
        manifest = self.config.manifest()
        manifest.update({"seeds": self.seeds, "timestamp": timestamp, "results_file": path.name})
        write_json_atomic(manifest, self.manifest_path())
        print(f"Batch results saved to: {path}")
        return path
