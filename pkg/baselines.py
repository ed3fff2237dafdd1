"""
Baseline edge scorers

EdgeBank memorizes observed edges (all of them, or only those inside a
recent time window). The logistic scorer is a small gradient-trained
model over snapshot statistics of the previous snapshot. Both follow the
EdgeScorer contract used by the evaluation harness and the trainer:
score_batch is read-only, observe runs after scoring the same batch.
"""

from __future__ import annotations

import copy
import hashlib
from abc import ABC, abstractmethod
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import repeat

import numpy as np
from loguru import logger

from config import EDGEBANK_SETTINGS, LOGISTIC_SETTINGS
from exceptions import ParameterError
from input_mapper import Batch
from temporal_graph import EventStream

MISSING = np.iinfo(np.int64).min // 4
FEATURE_DIM = len(LOGISTIC_SETTINGS["feature_names"])


def _lookup(table: dict, keys: np.ndarray, default: int) -> np.ndarray:
    return np.fromiter(map(table.get, keys.tolist(), repeat(default)), dtype=np.int64, count=keys.size)


def _digest(*arrays: np.ndarray) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def _dict_arrays(table: dict) -> tuple[np.ndarray, np.ndarray]:
    if not table:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    keys = np.fromiter(table.keys(), dtype=np.int64, count=len(table))
    values = np.fromiter(table.values(), dtype=np.int64, count=len(table))
    order = np.argsort(keys)
    return keys[order], values[order]


class EdgeScorer(ABC):
    """Shared scorer contract.

    `observed_through` is the index of the last observed snapshot (-1 before
    any observation); event batches without a snapshot index count as the
    next step.
    """

    name = "scorer"

    def __init__(self, num_nodes: int):
        if num_nodes < 1:
            raise ParameterError(f"num_nodes must be >= 1, got {num_nodes}")
        self.num_nodes = int(num_nodes)
        self.frozen = False
        self.observed_through = -1

    def pair_keys(self, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        return np.asarray(src, dtype=np.int64) * np.int64(self.num_nodes) + np.asarray(dst, dtype=np.int64)

    @abstractmethod
    def score_batch(self, src: np.ndarray, dst: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Scores for queries (src[i], dst[i], t[i]); never mutates state."""

    @abstractmethod
    def _update(self, batch: Batch, index: int) -> None:
        ...

    @abstractmethod
    def reset_state(self) -> None:
        """Forget everything observed; learned parameters are kept."""

    def observe(self, batch: Batch) -> None:
        if self.frozen:
            return
        index = batch.snapshot_index if batch.snapshot_index is not None else self.observed_through + 1
        self._update(batch, index)
        self.observed_through = index

    def observe_all(self, batches) -> None:
        for batch in batches:
            self.observe(batch)

    def freeze(self) -> None:
        self.frozen = True

    def unfreeze(self) -> None:
        self.frozen = False

    def reset(self) -> None:
        self.reset_state()
        self.frozen = False

    def parameter_checksum(self) -> str:
        return _digest(np.empty(0))

    @abstractmethod
    def state_checksum(self) -> str:
        ...

    def copy(self) -> EdgeScorer:
        return copy.deepcopy(self)


# ---------------------------------------------------------------- EdgeBank


@dataclass
class EdgeBankState:
    """Pair key -> last-seen timestamp.

    Unlimited memory ignores the timestamps; the fixed time window keeps
    only pairs last seen at or after t_now - window.
    """

    num_nodes: int
    memory_mode: str = "unlimited"  # "unlimited" or "fixed_time_window"
    window: int | None = None
    memory: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.memory_mode not in ("unlimited", "fixed_time_window"):
            raise ParameterError(f"invalid EdgeBank memory mode {self.memory_mode!r}")
        if self.memory_mode == "fixed_time_window" and (self.window is None or self.window < 0):
            raise ParameterError("fixed_time_window EdgeBank needs a non-negative window")


def edgebank_scores(state: EdgeBankState, src: np.ndarray, dst: np.ndarray, t: np.ndarray) -> np.ndarray:
    keys = np.asarray(src, dtype=np.int64) * np.int64(state.num_nodes) + np.asarray(dst, dtype=np.int64)
    last_seen = _lookup(state.memory, keys, MISSING)
    if state.memory_mode == "unlimited":
        hit = last_seen != MISSING
    else:
        hit = (last_seen != MISSING) & (last_seen >= np.asarray(t, dtype=np.int64) - state.window)
    return hit.astype(np.float64)


def edgebank_score(state: EdgeBankState, s: int, d: int, t: int) -> float:
    return float(edgebank_scores(state, np.array([s]), np.array([d]), np.array([t]))[0])


def edgebank_observe(state: EdgeBankState, batch: Batch) -> EdgeBankState:
    """Insert every pair of the batch, refreshing last-seen times."""
    if len(batch) == 0:
        return state
    order = np.argsort(batch.t, kind="stable")
    keys = (batch.src.astype(np.int64) * np.int64(state.num_nodes) + batch.dst.astype(np.int64))[order]
    times = batch.t.astype(np.int64)[order]
    memory = state.memory
    for key, ts in zip(keys.tolist(), times.tolist()):
        if memory.get(key, MISSING) < ts:
            memory[key] = ts
    return state


def resolve_window(
    rule: str,
    history: EventStream,
    test: EventStream | None = None,
    ratio: float | None = None,
) -> int:
    """Window length for EdgeBank-tw.

    "test_span": duration of the test split; "ratio": fraction of the
    observed history span.
    """
    if rule == "test_span":
        if test is None:
            raise ParameterError("test_span window rule needs the test split")
        return int(test.t_max - test.t_min)
    if rule == "ratio":
        ratio = EDGEBANK_SETTINGS["time_window_ratio"] if ratio is None else ratio
        return int(round(ratio * (history.t_max - history.t_min)))
    raise ParameterError(f"unknown window rule {rule!r}")


class EdgeBankScorer(EdgeScorer):
    def __init__(self, num_nodes: int, memory_mode: str = "unlimited", window: int | None = None):
        super().__init__(num_nodes)
        self.state = EdgeBankState(num_nodes=self.num_nodes, memory_mode=memory_mode, window=window)
        self.name = "edgebank-inf" if memory_mode == "unlimited" else "edgebank-tw"

    def score_batch(self, src, dst, t) -> np.ndarray:
        return edgebank_scores(self.state, src, dst, t)

    def _update(self, batch: Batch, index: int) -> None:
        edgebank_observe(self.state, batch)

    def reset_state(self) -> None:
        self.state.memory = {}
        self.observed_through = -1

    def state_checksum(self) -> str:
        return _digest(*_dict_arrays(self.state.memory))

    @property
    def memory_size(self) -> int:
        return len(self.state.memory)


# ---------------------------------------------------------------- logistic


@dataclass
class LogisticState:
    weights: np.ndarray
    num_nodes: int
    pair_last_seen: dict[int, int] = field(default_factory=dict)
    pair_count: dict[int, int] = field(default_factory=dict)
    prev_degree: np.ndarray | None = None
    prev_adj: dict[int, set[int]] = field(default_factory=dict)
    last_snapshot: int = -1

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.prev_degree is None:
            self.prev_degree = np.zeros(self.num_nodes, dtype=np.int64)

    def clear_caches(self) -> None:
        self.pair_last_seen = {}
        self.pair_count = {}
        self.prev_degree = np.zeros(self.num_nodes, dtype=np.int64)
        self.prev_adj = {}
        self.last_snapshot = -1


def feature_matrix(state: LogisticState, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Feature rows for pairs, using only snapshots observed so far."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    keys = src * np.int64(state.num_nodes) + dst
    counts = _lookup(state.pair_count, keys, 0)
    last = _lookup(state.pair_last_seen, keys, -1)
    since = state.last_snapshot - last
    recency = np.where(last >= 0, 1.0 / (1.0 + np.maximum(since, 0)), 0.0)

    empty: set[int] = set()
    adj = state.prev_adj
    common = np.fromiter(
        (len(adj.get(s, empty) & adj.get(d, empty)) for s, d in zip(src.tolist(), dst.tolist())),
        dtype=np.float64, count=src.size,
    )
    degree = state.prev_degree
    degree_product = degree[src].astype(np.float64) * degree[dst].astype(np.float64)

    return np.column_stack([
        np.ones(src.size),
        np.log1p(counts.astype(np.float64)),
        recency,
        np.log1p(common),
        np.log1p(degree_product),
    ])


def logistic_features(state: LogisticState, s: int, d: int) -> np.ndarray:
    return feature_matrix(state, np.array([s]), np.array([d]))[0]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logits(weights: np.ndarray, features: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != weights.shape[0]:
        raise ParameterError(f"feature dimension {features.shape[-1]} != weight dimension {weights.shape[0]}")
    # row-wise so a score does not depend on the row's position in the batch
    return np.sum(features * weights, axis=-1)


def logistic_score(weights: np.ndarray, features: np.ndarray) -> np.ndarray | float:
    """sigma(w . x), kept strictly inside (0, 1)."""
    z = _logits(weights, features)
    p = np.clip(_sigmoid(np.atleast_1d(z)), np.finfo(np.float64).tiny, np.nextafter(1.0, 0.0))
    return float(p[0]) if np.ndim(z) == 0 else p


def _split_examples(pos_features, neg_features) -> tuple[np.ndarray, np.ndarray]:
    pos = np.atleast_2d(np.asarray(pos_features, dtype=np.float64))
    neg = np.asarray(neg_features, dtype=np.float64)
    if neg.size == 0:
        raise ParameterError("at least one negative example is required")
    neg = neg.reshape(-1, pos.shape[1])
    return pos, neg


def logistic_loss(weights: np.ndarray, pos_features, neg_features) -> float:
    """Binary cross-entropy averaged over positive and negative examples."""
    pos, neg = _split_examples(pos_features, neg_features)
    pos_loss = np.logaddexp(0.0, -_logits(weights, pos))
    neg_loss = np.logaddexp(0.0, _logits(weights, neg))
    return float((pos_loss.sum() + neg_loss.sum()) / (pos.shape[0] + neg.shape[0]))


def logistic_grad(weights: np.ndarray, pos_features, neg_features) -> np.ndarray:
    pos, neg = _split_examples(pos_features, neg_features)
    pos_term = (_sigmoid(_logits(weights, pos)) - 1.0) @ pos
    neg_term = _sigmoid(_logits(weights, neg)) @ neg
    return (pos_term + neg_term) / (pos.shape[0] + neg.shape[0])


class LogisticScorer(EdgeScorer):
    name = "logistic"

    def __init__(self, num_nodes: int, weights: np.ndarray | None = None):
        super().__init__(num_nodes)
        if weights is None:
            weights = np.zeros(FEATURE_DIM)
        if len(weights) != FEATURE_DIM:
            raise ParameterError(f"logistic scorer expects {FEATURE_DIM} weights, got {len(weights)}")
        self.state = LogisticState(weights=np.array(weights, dtype=np.float64), num_nodes=self.num_nodes)

    @property
    def weights(self) -> np.ndarray:
        return self.state.weights

    @weights.setter
    def weights(self, value: np.ndarray) -> None:
        value = np.asarray(value, dtype=np.float64)
        if value.shape != (FEATURE_DIM,):
            raise ParameterError(f"logistic scorer expects {FEATURE_DIM} weights, got {value.shape}")
        if not np.all(np.isfinite(value)):
            raise ParameterError("non-finite logistic weights")
        self.state.weights = value.copy()

    def features(self, src, dst) -> np.ndarray:
        return feature_matrix(self.state, src, dst)

    def score_batch(self, src, dst, t) -> np.ndarray:
        if len(src) == 0:
            return np.empty(0)
        return logistic_score(self.state.weights, self.features(src, dst))

    def _update(self, batch: Batch, index: int) -> None:
        state = self.state
        keys = self.pair_keys(batch.src, batch.dst)
        unique, counts = np.unique(keys, return_counts=True)
        for key, c in zip(unique.tolist(), counts.tolist()):
            state.pair_count[key] = state.pair_count.get(key, 0) + c
            state.pair_last_seen[key] = index
        endpoints = np.concatenate([batch.src, batch.dst]).astype(np.int64)
        state.prev_degree = np.bincount(endpoints, minlength=self.num_nodes).astype(np.int64)
        adj: dict[int, set[int]] = defaultdict(set)
        for s, d in zip(batch.src.tolist(), batch.dst.tolist()):
            if s != d:
                adj[s].add(d)
                adj[d].add(s)
        state.prev_adj = dict(adj)
        state.last_snapshot = index
        logger.debug("logistic scorer observed step {} ({} edges)", index, len(batch))

    def reset_state(self) -> None:
        self.state.clear_caches()
        self.observed_through = -1

    def reset(self) -> None:
        super().reset()
        self.state.weights = np.zeros(FEATURE_DIM)

    def parameter_checksum(self) -> str:
        return _digest(self.state.weights)

    def state_checksum(self) -> str:
        state = self.state
        adj_pairs = np.array(
            sorted((u, v) for u, nbrs in state.prev_adj.items() for v in nbrs), dtype=np.int64
        ).reshape(-1, 2)
        return _digest(
            state.weights, *_dict_arrays(state.pair_count), *_dict_arrays(state.pair_last_seen),
            state.prev_degree, adj_pairs, np.array([state.last_snapshot]),
        )


def make_scorer(
    model: str,
    num_nodes: int,
    window: int | None = None,
    weights: np.ndarray | None = None,
) -> EdgeScorer:
    """Build a scorer from its command-line name."""
    if model == "edgebank-inf":
        return EdgeBankScorer(num_nodes, memory_mode="unlimited")
    if model == "edgebank-tw":
        return EdgeBankScorer(num_nodes, memory_mode="fixed_time_window", window=window)
    if model == "logistic":
        return LogisticScorer(num_nodes, weights=weights)
    raise ParameterError(f"unknown model {model!r}")
