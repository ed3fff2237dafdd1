"""
End-to-end runs

ingest -> split -> fixed negatives -> (train) -> evaluate, for one model
and one root seed. The command line and the batch runner both go through
`run_single`, so their results match a direct library call.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from baselines import EdgeScorer, LogisticScorer, make_scorer, resolve_window
from config import CODE_VERSION, EDGEBANK_SETTINGS, EVAL_SETTINGS, MODELS, NEGATIVE_SETTINGS, OUTPUT_SETTINGS, TRAINING_SETTINGS
from evaluation import NegativeSet, evaluate, generate_negatives, load_negatives, save_negatives
from ingest import CsvSchema, SplitSpec, chronological_split, parse_csv, split_by_boundaries
from input_mapper import (
    Batch,
    Partition,
    event_batches,
    finest_gapless_granularity,
    induce_window,
    interval_batches,
    make_partition,
)
from seeding import derive_seed
from temporal_graph import EventStream
from training import TrainConfig, TrainingReport, fit, select_learning_rate


class RunConfig(BaseModel):
    """Resolved settings of one pipeline run (also written to the manifest)."""

    model_config = ConfigDict(frozen=True)

    dataset: Path
    csv_schema: CsvSchema = Field(default_factory=CsvSchema)
    split: SplitSpec = Field(default_factory=SplitSpec)
    boundaries: tuple[int, int] | None = None
    granularity: str = "auto"
    model: str = "edgebank-inf"
    mode: Literal["streaming", "deployed"] = "streaming"
    tie_policy: Literal["pessimistic", "optimistic", "mean"] = EVAL_SETTINGS["tie_policy"]
    q: int | None = None
    pool: Literal["source", "global"] = NEGATIVE_SETTINGS["pool"]
    negatives_path: Path | None = None
    weights_path: Path | None = None
    seeds: list[int] = Field(default_factory=lambda: [NEGATIVE_SETTINGS["seed"]])
    batch_size: int = Field(default=EVAL_SETTINGS["batch_size"], ge=1)
    respect_timestamp_boundaries: bool = EVAL_SETTINGS["respect_timestamp_boundaries"]
    window_rule: Literal["test_span", "ratio"] = EDGEBANK_SETTINGS["window_rule"]
    time_window_ratio: float = Field(default=EDGEBANK_SETTINGS["time_window_ratio"], gt=0.0, le=1.0)
    learning_rates: list[float] = Field(default_factory=lambda: list(TRAINING_SETTINGS["learning_rates"]))
    training: TrainConfig = Field(default_factory=lambda: TrainConfig(epochs=TRAINING_SETTINGS["epochs_ctdg"]))
    output_directory: Path = Path(OUTPUT_SETTINGS["output_directory"])

    @field_validator("model")
    @classmethod
    def _known_model(cls, value: str) -> str:
        if value not in MODELS:
            raise ValueError(f"unknown model {value!r}; choose from {sorted(MODELS)}")
        return value

    @field_validator("seeds")
    @classmethod
    def _some_seeds(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("at least one seed is required")
        return value

    @model_validator(mode="after")
    def _files_exist(self) -> RunConfig:
        if not self.dataset.is_file():
            raise ValueError(f"dataset not found: {self.dataset}")
        for extra in (self.negatives_path, self.weights_path):
            if extra is not None and not extra.is_file():
                raise ValueError(f"file not found: {extra}")
        return self

    @property
    def dataset_name(self) -> str:
        return self.dataset.stem

    def manifest(self) -> dict:
        return {"code_version": CODE_VERSION, "config": self.model_dump(mode="json")}


def load_splits(cfg: RunConfig) -> tuple[EventStream, tuple[EventStream, EventStream, EventStream]]:
    stream = parse_csv(cfg.dataset, cfg.csv_schema)
    if cfg.boundaries is not None:
        return stream, split_by_boundaries(stream, *cfg.boundaries)
    return stream, chronological_split(stream, cfg.split)


def resolve_partition(stream: EventStream, granularity: str) -> Partition:
    if granularity == "auto":
        return finest_gapless_granularity(stream).partition
    return make_partition(stream, granularity)


def negatives_file(cfg: RunConfig, seed: int) -> Path:
    return cfg.output_directory / f"negatives_{cfg.dataset_name}_seed{seed}.jsonl"


def negatives_settings(cfg: RunConfig, test: EventStream) -> dict:
    """What a cached negatives file was generated for."""
    return {
        "q": cfg.q,
        "pool": cfg.pool,
        "historical_fraction": NEGATIVE_SETTINGS["historical_fraction"],
        "num_positives": len(test),
    }


def matches_positives(negatives: NegativeSet, test: EventStream) -> bool:
    return (
        len(negatives) == len(test)
        and np.array_equal(negatives.src, test.src)
        and np.array_equal(negatives.dst, test.dst)
        and np.array_equal(negatives.t, test.t_start)
    )


def _cached_negatives(path: Path, settings: dict, test: EventStream, seed: int) -> NegativeSet | None:
    meta = path.with_name(path.name + OUTPUT_SETTINGS["negatives_meta_suffix"])
    if not (path.is_file() and meta.is_file()):
        return None
    with open(meta, encoding="utf-8") as f:
        if json.load(f) != settings:
            logger.warning("negatives in {} were made with other settings; regenerating", path)
            return None
    negatives = load_negatives(path, seed=seed)
    if not matches_positives(negatives, test):
        logger.warning("negatives in {} do not match the test split; regenerating", path)
        return None
    logger.info("reusing negatives from {}", path)
    return negatives


def fixed_negatives(cfg: RunConfig, train: EventStream, test: EventStream, seed: int) -> NegativeSet:
    """Negatives shared by every model run on this dataset and seed.

    An explicit negatives file wins; otherwise the per-seed file in the
    output directory is reused when its recorded settings and positives
    match this run, and written afresh when they do not.
    """
    if cfg.negatives_path is not None:
        return load_negatives(cfg.negatives_path)
    path = negatives_file(cfg, seed)
    settings = negatives_settings(cfg, test)
    negatives = _cached_negatives(path, settings, test, derive_seed(seed, "negatives"))
    if negatives is not None:
        return negatives
    negatives = generate_negatives(
        train, test, q=cfg.q, seed=derive_seed(seed, "negatives"), pool=cfg.pool,
        num_nodes=train.num_nodes,
    )
    write_negatives(negatives, path, settings)
    return negatives


def write_negatives(negatives: NegativeSet, path: Path, settings: dict) -> Path:
    """Save a negatives file together with the settings it was made with."""
    path = save_negatives(negatives, path)
    meta = path.with_name(path.name + OUTPUT_SETTINGS["negatives_meta_suffix"])
    with open(meta, "w", encoding="utf-8") as f:
        json.dump(settings, f, indent=OUTPUT_SETTINGS["json_indent"], sort_keys=True)
    return path


def _edgebank(cfg: RunConfig, history: EventStream, test: EventStream) -> tuple[EdgeScorer, list[Batch], dict]:
    window = None
    if cfg.model == "edgebank-tw":
        window = resolve_window(cfg.window_rule, history, test, cfg.time_window_ratio)
    scorer = make_scorer(cfg.model, history.num_nodes, window=window)
    scorer.observe(Batch.from_stream(history))
    batches = event_batches(test, cfg.batch_size, cfg.respect_timestamp_boundaries)
    return scorer, batches, {"window": window}


def train_logistic(cfg: RunConfig, stream: EventStream, splits, seed: int) -> tuple[LogisticScorer, TrainingReport, Partition]:
    """Fit the logistic scorer on train/val snapshots cut from one global partition."""
    train, val, _ = splits
    p = resolve_partition(stream, cfg.granularity)
    train_seq, val_seq = induce_window(train, p), induce_window(val, p)
    train_cfg = cfg.training.model_copy(update={"seed": derive_seed(seed, "training")})

    def new_scorer() -> EdgeScorer:
        return make_scorer("logistic", stream.num_nodes)

    if len(cfg.learning_rates) > 1:
        _, scorer, report = select_learning_rate(new_scorer, train_seq, val_seq, train_cfg, cfg.learning_rates)
    else:
        if cfg.learning_rates:
            train_cfg = train_cfg.model_copy(update={"learning_rate": cfg.learning_rates[0]})
        scorer, report = fit(new_scorer(), train_seq, val_seq, train_cfg)
    return scorer, report, p


def load_weights(path: str | Path) -> np.ndarray:
    """Weights from a training report JSON."""
    with open(path, encoding="utf-8") as f:
        return np.asarray(json.load(f)["weights"], dtype=np.float64)


def _logistic(cfg: RunConfig, stream: EventStream, splits, seed: int) -> tuple[EdgeScorer, list[Batch], dict]:
    train, val, _ = splits
    if cfg.weights_path is not None:
        p = resolve_partition(stream, cfg.granularity)
        scorer = make_scorer("logistic", stream.num_nodes, weights=load_weights(cfg.weights_path))
        extra = {"weights_file": str(cfg.weights_path)}
    else:
        scorer, report, p = train_logistic(cfg, stream, splits, seed)
        extra = {"training": report.to_dict()}
    history_batches, test_batches = split_at_test_interval(stream, len(train) + len(val), p)

    scorer.reset_state()
    scorer.observe_all(history_batches)
    extra.update({"granularity_width": p.width, "num_snapshots": p.count})
    return scorer, test_batches, extra


def split_at_test_interval(stream: EventStream, num_history: int, p: Partition) -> tuple[list[Batch], list[Batch]]:
    """History batches before the first test interval, then the test batches.

    History events that share the first test interval ride along as the
    context of its batch, so they are observed together with the test
    events of that snapshot and never before them.
    """
    history = stream.slice(0, num_history)
    first_test = p.index_of(int(stream.t_start[num_history]))
    cut = int(np.searchsorted(p.indices_of(history.t_start), first_test))
    history_batches = interval_batches(history.slice(0, cut), p) if cut else []
    test_batches = interval_batches(stream.slice(cut, len(stream)), p)
    test_batches[0] = test_batches[0].with_context(num_history - cut)
    if cut < num_history:
        logger.debug("{} history events share test interval {}", num_history - cut, first_test)
    return history_batches, test_batches


def run_single(cfg: RunConfig, seed: int, stream_and_splits=None) -> dict:
    """Results record for one (model, seed)."""
    stream, splits = stream_and_splits or load_splits(cfg)
    train, val, test = splits
    history = stream.slice(0, len(train) + len(val))
    negatives = fixed_negatives(cfg, train, test, seed)

    if cfg.model == "logistic":
        scorer, batches, extra = _logistic(cfg, stream, splits, seed)
    else:
        scorer, batches, extra = _edgebank(cfg, history, test)

    result = evaluate(scorer, batches, negatives, mode=cfg.mode, tie_policy=cfg.tie_policy)
    record = {
        "model": cfg.model,
        "dataset": cfg.dataset_name,
        "mode": cfg.mode,
        "seed": seed,
        "mrr": result.mrr,
        "per_batch_mrr": result.per_batch_mrr,
        "runtime_seconds": result.runtime_seconds,
        "num_positives": int(result.ranks.size),
        "q": negatives.q,
        "tie_policy": cfg.tie_policy,
    }
    record.update(extra)
    return record
