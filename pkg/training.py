"""
Training loops for the logistic edge scorer

UTG training predicts each snapshot from the state built over the earlier
snapshots and takes a gradient step right away (a truncation window of
one snapshot). The accumulated baseline runs the same forward pass but
sums the gradients over the whole sequence and updates once per epoch.
Early stopping watches validation MRR under streaming evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Literal, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from tqdm import tqdm

from baselines import EdgeScorer, LogisticScorer, logistic_grad, logistic_loss
from config import EVAL_SETTINGS, NEGATIVE_SETTINGS, TRAINING_SETTINGS
from evaluation import generate_negatives, streaming_evaluate
from exceptions import ParameterError, TrainingError
from input_mapper import Batch, snapshot_batches, snapshots_to_stream, window_offset
from seeding import component_rng, derive_seed
from temporal_graph import SnapshotSequence

TrainMode = Literal["per_snapshot", "accumulated"]


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(default=TRAINING_SETTINGS["epochs_dtdg"], ge=1)
    patience: int = Field(default=TRAINING_SETTINGS["patience"], ge=0)
    tolerance: float = Field(default=TRAINING_SETTINGS["tolerance"], ge=0.0)
    learning_rate: float = Field(default=TRAINING_SETTINGS["learning_rates"][0], ge=0.0)
    mode: TrainMode = "per_snapshot"
    optimizer: Literal["sgd", "adam"] = TRAINING_SETTINGS["optimizer"]
    negatives_per_positive: int = Field(default=TRAINING_SETTINGS["negatives_per_positive_train"], ge=1)
    val_negatives: int = Field(default=TRAINING_SETTINGS["val_negatives"], ge=1)
    tie_policy: str = EVAL_SETTINGS["tie_policy"]
    seed: int = NEGATIVE_SETTINGS["seed"]

    @model_validator(mode="before")
    @classmethod
    def _default_patience(cls, data):
        # an unset patience never exceeds a short epoch budget
        if isinstance(data, dict) and data.get("patience") is None and "epochs" in data:
            data = {**data, "patience": min(TRAINING_SETTINGS["patience"], int(data["epochs"]))}
        return data

    @field_validator("mode", mode="before")
    @classmethod
    def _accept_utg_alias(cls, value):
        return "per_snapshot" if value == "utg" else value

    @field_validator("learning_rate")
    @classmethod
    def _finite_rate(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("learning_rate must be finite")
        return value

    @model_validator(mode="after")
    def _patience_within_epochs(self) -> TrainConfig:
        if self.patience > self.epochs:
            raise ValueError(f"patience ({self.patience}) exceeds epochs ({self.epochs})")
        return self


# ---------------------------------------------------------------- optimizers


class SGD:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, weights: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return weights - self.learning_rate * grad


class Adam:
    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: np.ndarray | None = None
        self.v: np.ndarray | None = None
        self.t = 0

    def step(self, weights: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(weights)
            self.v = np.zeros_like(weights)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return weights - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(cfg: TrainConfig) -> SGD | Adam:
    if cfg.optimizer == "adam":
        return Adam(cfg.learning_rate)
    return SGD(cfg.learning_rate)


# ---------------------------------------------------------------- epochs


def _check_trainable(scorer: EdgeScorer, train_seq: SnapshotSequence) -> LogisticScorer:
    if not isinstance(scorer, LogisticScorer):
        raise TrainingError(f"{scorer.name} has no trainable parameters")
    if len(train_seq) < 2:
        raise TrainingError(f"training needs at least 2 snapshots, got {len(train_seq)}")
    if scorer.num_nodes < 2:
        raise TrainingError("training negatives need at least 2 nodes")
    return scorer


def _snapshot_steps(
    scorer: LogisticScorer, train_seq: SnapshotSequence, cfg: TrainConfig, epoch: int
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (positive, negative) feature rows for snapshots 1..T-1.

    Features for snapshot t come from snapshots 0..t-1 only; snapshot t is
    observed after the consumer has taken its step.
    """
    rng = component_rng(cfg.seed, "train", epoch)
    n = scorer.num_nodes
    k = cfg.negatives_per_positive
    scorer.reset_state()
    scorer.unfreeze()
    batches = snapshot_batches(train_seq)
    scorer.observe(batches[0])
    for batch in batches[1:]:
        if len(batch):
            src = np.repeat(batch.src, k)
            # shift by 1..n-1 so a negative never equals the true destination
            neg_dst = (np.repeat(batch.dst, k) + rng.integers(1, n, size=src.size)) % n
            yield scorer.features(batch.src, batch.dst), scorer.features(src, neg_dst)
        scorer.observe(batch)


def utg_train_epoch(
    scorer: EdgeScorer,
    train_seq: SnapshotSequence,
    cfg: TrainConfig,
    epoch: int = 0,
    optimizer: SGD | Adam | None = None,
) -> tuple[LogisticScorer, float]:
    """One epoch with a gradient step after every snapshot; returns the mean snapshot loss."""
    scorer = _check_trainable(scorer, train_seq)
    optimizer = optimizer or make_optimizer(cfg)
    losses = []
    for pos, neg in _snapshot_steps(scorer, train_seq, cfg, epoch):
        losses.append(logistic_loss(scorer.weights, pos, neg))
        scorer.weights = optimizer.step(scorer.weights, logistic_grad(scorer.weights, pos, neg))
    if not losses:
        raise TrainingError("no snapshot after the first one has edges")
    return scorer, math.fsum(losses) / len(losses)


def accumulated_gradient(scorer: EdgeScorer, train_seq: SnapshotSequence, cfg: TrainConfig,
                         epoch: int = 0) -> tuple[np.ndarray, float]:
    """Summed snapshot gradients and mean loss, all at the current weights."""
    scorer = _check_trainable(scorer, train_seq)
    total = np.zeros_like(scorer.weights)
    losses = []
    for pos, neg in _snapshot_steps(scorer, train_seq, cfg, epoch):
        losses.append(logistic_loss(scorer.weights, pos, neg))
        total += logistic_grad(scorer.weights, pos, neg)
    if not losses:
        raise TrainingError("no snapshot after the first one has edges")
    return total, math.fsum(losses) / len(losses)


def accumulated_train_epoch(
    scorer: EdgeScorer,
    train_seq: SnapshotSequence,
    cfg: TrainConfig,
    epoch: int = 0,
    optimizer: SGD | Adam | None = None,
) -> tuple[LogisticScorer, float]:
    """One epoch with a single update from the gradient summed over all snapshots."""
    optimizer = optimizer or make_optimizer(cfg)
    grad, loss = accumulated_gradient(scorer, train_seq, cfg, epoch)
    scorer.weights = optimizer.step(scorer.weights, grad)
    return scorer, loss


# ---------------------------------------------------------------- fit


@dataclass
class TrainingReport:
    mode: str
    learning_rate: float
    optimizer: str
    per_epoch: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_mrr: float = float("-inf")
    weights: list[float] = field(default_factory=list)
    stopped_early: bool = False

    @property
    def epochs_run(self) -> int:
        return len(self.per_epoch)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "learning_rate": self.learning_rate,
            "optimizer": self.optimizer,
            "per_epoch": self.per_epoch,
            "best_epoch": self.best_epoch,
            "best_val_mrr": self.best_val_mrr,
            "weights": self.weights,
            "stopped_early": self.stopped_early,
            "epochs_run": self.epochs_run,
        }


def _sequence_offset(seq: SnapshotSequence, reference: SnapshotSequence) -> int:
    try:
        return window_offset(seq.partition, reference.partition)
    except ParameterError:
        return len(reference)


def validation_batches(train_seq: SnapshotSequence, val_seq: SnapshotSequence) -> list[Batch]:
    """Validation snapshots indexed after (or aligned with) the training snapshots."""
    return snapshot_batches(val_seq, offset=_sequence_offset(val_seq, train_seq))


def validation_mrr(scorer: EdgeScorer, train_seq: SnapshotSequence, val_batches: Sequence[Batch],
                   val_negatives, tie_policy: str) -> float:
    """Streaming MRR on a copy whose state is rebuilt from the training snapshots."""
    walker = scorer.copy()
    walker.reset_state()
    walker.unfreeze()
    walker.observe_all(snapshot_batches(train_seq))
    return streaming_evaluate(walker, val_batches, val_negatives, tie_policy).mrr


def fit(
    scorer: EdgeScorer,
    train_seq: SnapshotSequence,
    val_seq: SnapshotSequence,
    cfg: TrainConfig,
    progress: bool = False,
) -> tuple[LogisticScorer, TrainingReport]:
    """Train with early stopping and restore the weights of the best validation epoch."""
    scorer = _check_trainable(scorer, train_seq)
    val_batches = validation_batches(train_seq, val_seq)
    train_stream = snapshots_to_stream(train_seq)
    val_stream = snapshots_to_stream(val_seq)
    val_negatives = generate_negatives(
        train_stream, val_stream,
        q=min(cfg.val_negatives, scorer.num_nodes - 1),
        seed=derive_seed(cfg.seed, "validation"),
        num_nodes=scorer.num_nodes,
    )

    run_epoch = utg_train_epoch if cfg.mode == "per_snapshot" else accumulated_train_epoch
    optimizer = make_optimizer(cfg)
    report = TrainingReport(mode=cfg.mode, learning_rate=cfg.learning_rate, optimizer=cfg.optimizer)
    best_weights = scorer.weights.copy()
    stale = 0

    for epoch in tqdm(range(cfg.epochs), desc=f"training ({cfg.mode})", disable=not progress):
        _, loss = run_epoch(scorer, train_seq, cfg, epoch, optimizer)
        val_mrr = validation_mrr(scorer, train_seq, val_batches, val_negatives, cfg.tie_policy)
        report.per_epoch.append({"epoch": epoch, "loss": loss, "val_mrr": val_mrr})
        logger.info("epoch {}: loss={:.6f} val_mrr={:.4f}", epoch, loss, val_mrr)

        if val_mrr > report.best_val_mrr + cfg.tolerance:
            report.best_val_mrr = val_mrr
            report.best_epoch = epoch
            best_weights = scorer.weights.copy()
            stale = 0
        else:
            stale += 1
            if stale > cfg.patience:
                report.stopped_early = True
                logger.info("early stopping after epoch {} (best epoch {})", epoch, report.best_epoch)
                break

    scorer.weights = best_weights
    scorer.reset_state()
    report.weights = best_weights.tolist()
    return scorer, report


def select_learning_rate(
    make_scorer: Callable[[], EdgeScorer],
    train_seq: SnapshotSequence,
    val_seq: SnapshotSequence,
    cfg: TrainConfig,
    rates: Sequence[float] | None = None,
    progress: bool = False,
) -> tuple[float, LogisticScorer, TrainingReport]:
    """Fit once per candidate rate and keep the best validation MRR (first rate wins ties)."""
    rates = list(TRAINING_SETTINGS["learning_rates"] if rates is None else rates)
    if not rates:
        raise TrainingError("no learning rates to select from")
    best = None
    for rate in rates:
        scorer, report = fit(make_scorer(), train_seq, val_seq, cfg.model_copy(update={"learning_rate": rate}), progress)
        logger.info("learning rate {}: best val MRR {:.4f}", rate, report.best_val_mrr)
        if best is None or report.best_val_mrr > best[2].best_val_mrr:
            best = (rate, scorer, report)
    return best
