"""
Evaluation harness

Fixed negative sets (half historical, half random destinations per
positive edge), rank computation with explicit tie policies, and the
streaming / deployed evaluation loops. Scoring of a batch always happens
before the scorer observes that batch.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from loguru import logger
from tqdm import tqdm

from baselines import EdgeScorer
from config import EVAL_SETTINGS, NEGATIVE_SETTINGS
from exceptions import LeakageError, ParameterError, ProtocolError, ScoreValidationError
from input_mapper import Batch
from temporal_graph import EventStream

TIE_POLICIES = ("pessimistic", "optimistic", "mean")


@dataclass(frozen=True, eq=False)
class NegativeSet:
    """Negative destinations for each positive test edge, in stream order."""

    src: np.ndarray
    dst: np.ndarray
    t: np.ndarray
    negatives: np.ndarray  # shape (num_positives, q)
    historical_counts: np.ndarray
    seed: int
    q: int

    def __len__(self) -> int:
        return int(self.src.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NegativeSet):
            return NotImplemented
        return self.seed == other.seed and self.q == other.q and all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("src", "dst", "t", "negatives", "historical_counts")
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def composition(self) -> tuple[int, int]:
        historical = int(self.historical_counts.sum())
        return historical, int(self.negatives.size) - historical

    def take(self, indices: np.ndarray) -> NegativeSet:
        return NegativeSet(
            src=self.src[indices], dst=self.dst[indices], t=self.t[indices],
            negatives=self.negatives[indices], historical_counts=self.historical_counts[indices],
            seed=self.seed, q=self.q,
        )


def resolve_q(num_nodes: int, q: int | None = None) -> int:
    """Explicit q is validated; the default is clipped to every non-true destination."""
    if q is None:
        q = NEGATIVE_SETTINGS["q"]
        if q >= num_nodes:
            logger.warning("only {} nodes: using q={} negatives per positive", num_nodes, num_nodes - 1)
            q = num_nodes - 1
    if q < 1:
        raise ParameterError(f"q must be >= 1, got {q}")
    if q >= num_nodes:
        raise ParameterError(f"q={q} negatives cannot exclude the true destination among {num_nodes} nodes")
    return int(q)


def _historical_pools(train: EventStream, pool: str) -> dict[int, np.ndarray] | np.ndarray:
    if pool == "global":
        return np.unique(train.dst)
    if pool != "source":
        raise ParameterError(f"unknown historical pool {pool!r}")
    keys = np.unique(train.pair_keys())
    n = np.int64(train.num_nodes)
    src, dst = keys // n, keys % n
    cuts = np.flatnonzero(np.diff(src)) + 1
    return {int(group_src[0]): group_dst for group_src, group_dst in zip(np.split(src, cuts), np.split(dst, cuts))}


def _random_fill(rng: np.random.Generator, num_nodes: int, need: int, excluded: np.ndarray) -> np.ndarray:
    if need == 0:
        return np.empty(0, dtype=np.int64)
    available = num_nodes - excluded.size
    if available <= 4 * need:
        allowed = np.setdiff1d(np.arange(num_nodes, dtype=np.int64), excluded, assume_unique=True)
        return rng.choice(allowed, size=need, replace=False)
    taken = set(excluded.tolist())
    picked: list[int] = []
    while len(picked) < need:
        for node in rng.integers(0, num_nodes, size=2 * (need - len(picked)) + 8).tolist():
            if node not in taken:
                taken.add(node)
                picked.append(node)
                if len(picked) == need:
                    break
    return np.asarray(picked, dtype=np.int64)


def generate_negatives(
    train: EventStream,
    test: EventStream,
    q: int | None = None,
    seed: int | None = None,
    pool: str | None = None,
    historical_fraction: float | None = None,
    num_nodes: int | None = None,
) -> NegativeSet:
    """Fixed per-positive negatives: up to floor(q/2) historical, the rest uniform random.

    Historical candidates for a positive (s, d, t) are destinations s linked
    to in training that do not occur with s at timestamp t in the test split.
    A short historical pool is backfilled with random destinations.
    """
    seed = NEGATIVE_SETTINGS["seed"] if seed is None else int(seed)
    pool = NEGATIVE_SETTINGS["pool"] if pool is None else pool
    historical_fraction = NEGATIVE_SETTINGS["historical_fraction"] if historical_fraction is None else historical_fraction
    n = num_nodes or max(train.num_nodes, test.num_nodes)
    q = resolve_q(n, q)
    n_hist = int(math.floor(q * historical_fraction))

    pools = _historical_pools(train, pool)
    at_timestamp: dict[tuple[int, int], list[int]] = {}
    for s, d, ts in zip(test.src.tolist(), test.dst.tolist(), test.t_start.tolist()):
        at_timestamp.setdefault((s, ts), []).append(d)

    rng = np.random.default_rng(seed)
    m = len(test)
    negatives = np.empty((m, q), dtype=np.int64)
    historical_counts = np.zeros(m, dtype=np.int64)
    shortfalls = 0
    empty = np.empty(0, dtype=np.int64)
    for i, (s, d, ts) in enumerate(zip(test.src.tolist(), test.dst.tolist(), test.t_start.tolist())):
        candidates = pools if isinstance(pools, np.ndarray) else pools.get(s, empty)
        if candidates.size:
            candidates = candidates[~np.isin(candidates, at_timestamp[(s, ts)])]
            candidates = candidates[candidates != d]
        k = min(n_hist, candidates.size)
        if k < n_hist:
            shortfalls += 1
        hist = rng.choice(candidates, size=k, replace=False) if k else empty
        excluded = np.unique(np.concatenate([hist, [d]])).astype(np.int64)
        fill = _random_fill(rng, n, q - k, excluded)
        negatives[i, :k] = hist
        negatives[i, k:] = fill
        historical_counts[i] = k

    if shortfalls:
        logger.warning("{} of {} positives had fewer than {} historical candidates", shortfalls, m, n_hist)
    logger.info("generated {} negatives for {} positives (seed={}, pool={})", q, m, seed, pool)
    return NegativeSet(
        src=test.src.copy(), dst=test.dst.copy(), t=test.t_start.copy(),
        negatives=negatives, historical_counts=historical_counts, seed=seed, q=q,
    )


def save_negatives(negatives: NegativeSet, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for i in range(len(negatives)):
            record = {
                "pos_index": i,
                "src": int(negatives.src[i]),
                "dst": int(negatives.dst[i]),
                "t": int(negatives.t[i]),
                "negatives": negatives.negatives[i].tolist(),
                "num_historical": int(negatives.historical_counts[i]),
            }
            f.write(json.dumps(record) + "\n")
    logger.info("saved {} negative lists to {}", len(negatives), path)
    return path


def load_negatives(path: str | Path, seed: int = -1) -> NegativeSet:
    """Read a negatives JSONL file (ours or an imported benchmark file)."""
    records = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if line.strip():
                records.append(json.loads(line))
                if records[-1].get("pos_index", len(records) - 1) != len(records) - 1:
                    raise ParameterError(f"{path}:{line_no}: pos_index out of order")
    if not records:
        raise ParameterError(f"{path}: no negative lists")
    q = len(records[0]["negatives"])
    for r in records:
        if len(r["negatives"]) != q:
            raise ParameterError(f"{path}: positive {r['pos_index']} has {len(r['negatives'])} negatives, expected {q}")
        if r["dst"] in r["negatives"]:
            raise ParameterError(f"{path}: positive {r['pos_index']} lists its true destination as a negative")
    return NegativeSet(
        src=np.array([r["src"] for r in records], dtype=np.int64),
        dst=np.array([r["dst"] for r in records], dtype=np.int64),
        t=np.array([r["t"] for r in records], dtype=np.int64),
        negatives=np.array([r["negatives"] for r in records], dtype=np.int64).reshape(len(records), q),
        historical_counts=np.array([r.get("num_historical", 0) for r in records], dtype=np.int64),
        seed=seed, q=q,
    )


def _check_policy(tie_policy: str) -> None:
    if tie_policy not in TIE_POLICIES:
        raise ParameterError(f"unknown tie policy {tie_policy!r}; choose from {TIE_POLICIES}")


def ranks_for(true_scores: np.ndarray, negative_scores: np.ndarray, tie_policy: str = "pessimistic") -> np.ndarray:
    """Rank of each true score against its row of negative scores."""
    _check_policy(tie_policy)
    true_scores = np.asarray(true_scores, dtype=np.float64)
    negative_scores = np.asarray(negative_scores, dtype=np.float64).reshape(true_scores.size, -1)
    if np.isnan(true_scores).any() or np.isnan(negative_scores).any():
        raise ScoreValidationError("NaN score in ranking input")
    greater = (negative_scores > true_scores[:, None]).sum(axis=1)
    ties = (negative_scores == true_scores[:, None]).sum(axis=1)
    if tie_policy == "pessimistic":
        return 1 + greater + ties
    if tie_policy == "optimistic":
        return 1 + greater
    return 1 + greater + (ties + 1) // 2


def rank_of(true_score: float, negative_scores: Sequence[float], tie_policy: str = "pessimistic") -> int:
    return int(ranks_for(np.array([true_score]), np.asarray(negative_scores, dtype=np.float64).reshape(1, -1), tie_policy)[0])


def mean_reciprocal_rank(ranks: Iterable[int]) -> float:
    """Exactly rounded mean, independent of the order of the ranks."""
    reciprocal = [1.0 / r for r in ranks]
    return math.fsum(reciprocal) / len(reciprocal)


@dataclass
class RankResult:
    ranks: np.ndarray
    per_batch_mrr: list[float] = field(default_factory=list)
    runtime_seconds: float = 0.0

    @property
    def reciprocal_ranks(self) -> np.ndarray:
        return 1.0 / self.ranks

    @property
    def mrr(self) -> float:
        if self.ranks.size == 0:
            raise ProtocolError("no positive edges were ranked")
        return mean_reciprocal_rank(self.ranks.tolist())

    def to_dict(self) -> dict:
        return {"mrr": self.mrr, "per_batch_mrr": self.per_batch_mrr, "num_positives": int(self.ranks.size)}


def _check_order(batches: Sequence[Batch]) -> None:
    last_time = None
    last_index = None
    for k, batch in enumerate(batches):
        if batch.snapshot_index is not None:
            if last_index is not None and batch.snapshot_index <= last_index:
                raise ProtocolError(f"batch {k}: snapshot {batch.snapshot_index} after snapshot {last_index}")
            last_index = batch.snapshot_index
        if len(batch):
            lo = int(batch.t.min())
            if last_time is not None and lo < last_time:
                raise ProtocolError(f"batch {k} starts at t={lo}, before the previous batch ended (t={last_time})")
            last_time = int(batch.t.max())


def _run(
    scorer: EdgeScorer,
    batches: Sequence[Batch],
    negatives: NegativeSet,
    tie_policy: str,
    progress: bool,
) -> RankResult:
    _check_policy(tie_policy)
    _check_order(batches)
    total = sum(b.num_queries for b in batches)
    if total != len(negatives):
        raise ProtocolError(f"{total} positive edges but {len(negatives)} negative lists")

    q = negatives.q
    checksum = scorer.parameter_checksum()
    started = time.perf_counter()
    ranks = np.empty(total, dtype=np.int64)
    per_batch: list[float] = []
    lo = 0
    for batch in tqdm(batches, desc="evaluating", disable=not progress):
        m = batch.num_queries
        if m == 0:
            scorer.observe(batch)
            continue
        hi = lo + m
        src, dst, t = batch.queries()
        if not (np.array_equal(negatives.src[lo:hi], src) and np.array_equal(negatives.dst[lo:hi], dst)):
            raise ProtocolError(f"negative lists {lo}..{hi} do not match the positives of the batch")
        candidates = np.column_stack([dst, negatives.negatives[lo:hi]])
        scores = scorer.score_batch(
            np.repeat(src, q + 1), candidates.ravel(), np.repeat(t, q + 1)
        ).reshape(m, q + 1)
        batch_ranks = ranks_for(scores[:, 0], scores[:, 1:], tie_policy)
        ranks[lo:hi] = batch_ranks
        per_batch.append(mean_reciprocal_rank(batch_ranks.tolist()))
        scorer.observe(batch)
        lo = hi

    if scorer.parameter_checksum() != checksum:
        raise LeakageError("scorer parameters changed during evaluation")
    result = RankResult(ranks=ranks, per_batch_mrr=per_batch, runtime_seconds=time.perf_counter() - started)
    logger.info("{} evaluation: MRR={:.4f} over {} positives", scorer.name, result.mrr, total)
    return result


def streaming_evaluate(
    scorer: EdgeScorer,
    test_batches: Sequence[Batch],
    negatives: NegativeSet,
    tie_policy: str | None = None,
    progress: bool = False,
) -> RankResult:
    """Score each batch with the current state, then let the scorer observe it."""
    tie_policy = EVAL_SETTINGS["tie_policy"] if tie_policy is None else tie_policy
    if scorer.frozen:
        raise ProtocolError("streaming evaluation needs an unfrozen scorer")
    return _run(scorer, test_batches, negatives, tie_policy, progress)


def deployed_evaluate(
    scorer: EdgeScorer,
    test_batches: Sequence[Batch],
    negatives: NegativeSet,
    tie_policy: str | None = None,
    progress: bool = False,
) -> RankResult:
    """Same loop with the scorer frozen: test batches never enter its state."""
    tie_policy = EVAL_SETTINGS["tie_policy"] if tie_policy is None else tie_policy
    state = scorer.state_checksum()
    was_frozen = scorer.frozen
    scorer.freeze()
    try:
        result = _run(scorer, test_batches, negatives, tie_policy, progress)
    finally:
        scorer.frozen = was_frozen
    if scorer.state_checksum() != state:
        raise LeakageError("scorer state changed during deployed evaluation")
    return result


def evaluate(
    scorer: EdgeScorer,
    test_batches: Sequence[Batch],
    negatives: NegativeSet,
    mode: str = "streaming",
    tie_policy: str | None = None,
    progress: bool = False,
) -> RankResult:
    if mode == "streaming":
        return streaming_evaluate(scorer, test_batches, negatives, tie_policy, progress)
    if mode == "deployed":
        return deployed_evaluate(scorer, test_batches, negatives, tie_policy, progress)
    raise ParameterError(f"unknown evaluation mode {mode!r}")
