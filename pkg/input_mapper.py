"""
Input mapper

Converts event streams into snapshot sequences through regular
discretization partitions, and snapshot sequences (or raw streams) into
the event batches consumed by streaming scorers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from loguru import logger

from config import DEFAULT_GRANULARITY_CANDIDATES, GRANULARITIES
from exceptions import CoverageError, ParameterError, TimeRangeError
from temporal_graph import EventStream, Snapshot, SnapshotSequence, validate_stream


@dataclass(frozen=True)
class Granularity:
    name: str
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ParameterError(f"granularity width must be >= 1, got {self.width}")

    @classmethod
    def of(cls, value: Granularity | str | int) -> Granularity:
        """Accept a Granularity, a named granularity or a raw width."""
        if isinstance(value, Granularity):
            return value
        if isinstance(value, str):
            if value in GRANULARITIES:
                return cls(value, GRANULARITIES[value])
            if value.isdigit():
                return cls(f"custom-{value}", int(value))
            raise ParameterError(f"unknown granularity {value!r}; choose from {sorted(GRANULARITIES)}")
        return cls(f"custom-{int(value)}", int(value))


@dataclass(frozen=True)
class Partition:
    """Regular partition of [t0, t_max] into `count` intervals of `width`.

    Intervals are half-open [tau_i, tau_{i+1}) except the last, which is
    closed. With `remainder` set the last boundary is pulled back to
    t_max + 1 so the final interval may be shorter than `width`.
    """

    t0: int
    width: int
    count: int
    remainder: bool = False
    t_max: int | None = None

    def __post_init__(self):
        if self.width < 1:
            raise ParameterError(f"partition width must be >= 1, got {self.width}")
        if self.count < 1:
            raise ParameterError(f"partition count must be >= 1, got {self.count}")
        if self.remainder and self.t_max is None:
            raise ParameterError("remainder mode needs t_max")

    @classmethod
    def regular(cls, t0: int, width: int, count: int) -> Partition:
        return cls(t0=int(t0), width=int(width), count=int(count))

    @cached_property
    def boundaries(self) -> np.ndarray:
        bounds = self.t0 + self.width * np.arange(self.count + 1, dtype=np.int64)
        if self.remainder:
            bounds[-1] = min(int(bounds[-1]), int(self.t_max) + 1)
        bounds.setflags(write=False)
        return bounds

    @property
    def t_end(self) -> int:
        return int(self.boundaries[-1])

    @property
    def norm(self) -> int:
        """Longest interval duration."""
        return self.width

    @property
    def is_regular(self) -> bool:
        return bool(np.all(np.diff(self.boundaries) == self.width))

    def covers(self, t: int) -> bool:
        return self.t0 <= t <= self.t_end

    def index_of(self, t: int) -> int:
        if not self.covers(t):
            raise TimeRangeError(f"t={t} outside partition coverage [{self.t0}, {self.t_end}]")
        return min((int(t) - self.t0) // self.width, self.count - 1)

    def indices_of(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.int64)
        if t.size and (t.min() < self.t0 or t.max() > self.t_end):
            raise TimeRangeError(f"timestamps outside partition coverage [{self.t0}, {self.t_end}]")
        return np.minimum((t - self.t0) // self.width, self.count - 1)

    def interval(self, index: int) -> tuple[int, int]:
        return int(self.boundaries[index]), int(self.boundaries[index + 1])


@dataclass(frozen=True, eq=False)
class Batch:
    """Events handed to a scorer in one predict-then-update step.

    `t` holds the query timestamp of each event: its start time, clipped to
    the snapshot interval when the batch comes from a snapshot.

    The first `context` events are history that shares the interval with
    the queries: they are observed with the batch but never ranked.
    """

    src: np.ndarray
    dst: np.ndarray
    t: np.ndarray
    weight: np.ndarray
    t_span: tuple[int, int]
    snapshot_index: int | None = None
    context: int = 0

    def __post_init__(self):
        if not 0 <= self.context <= len(self):
            raise ParameterError(f"context {self.context} outside 0..{len(self)}")

    def __len__(self) -> int:
        return int(self.src.shape[0])

    @property
    def num_queries(self) -> int:
        return len(self) - self.context

    def queries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        c = self.context
        return self.src[c:], self.dst[c:], self.t[c:]

    def with_context(self, context: int) -> Batch:
        return Batch(
            src=self.src, dst=self.dst, t=self.t, weight=self.weight,
            t_span=self.t_span, snapshot_index=self.snapshot_index, context=context,
        )

    @property
    def events(self) -> list[tuple[int, int, int, float]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.t.tolist(), self.weight.tolist()))

    def permuted(self, order: np.ndarray) -> Batch:
        """Reorder the queries; context events stay in front."""
        order = np.concatenate([np.arange(self.context), self.context + np.asarray(order, dtype=np.int64)])
        return Batch(
            src=self.src[order], dst=self.dst[order], t=self.t[order], weight=self.weight[order],
            t_span=self.t_span, snapshot_index=self.snapshot_index, context=self.context,
        )

    @classmethod
    def from_stream(cls, stream: EventStream, snapshot_index: int | None = None,
                    t_span: tuple[int, int] | None = None) -> Batch:
        if t_span is None:
            t_span = (int(stream.t_start.min()), int(stream.t_start.max())) if len(stream) else (0, 0)
        return cls(
            src=stream.src, dst=stream.dst, t=stream.t_start, weight=stream.weight,
            t_span=t_span, snapshot_index=snapshot_index,
        )


@dataclass(frozen=True)
class GranularityChoice:
    granularity: Granularity
    num_snapshots: int
    partition: Partition


def make_partition(
    stream: EventStream,
    granularity: Granularity | str | int | None = None,
    count: int | None = None,
    remainder: bool = False,
) -> Partition:
    """Regular partition over [t_min, t_max] by interval width or interval count.

    By count the width is ceil(span / count), which can cover the span in
    fewer than `count` intervals (span 10, count 6: width 2, 5 intervals).
    """
    if (granularity is None) == (count is None):
        raise ParameterError("pass exactly one of granularity or count")
    t_min, t_max = stream.t_min, stream.t_max
    length = t_max - t_min + 1
    if count is not None:
        if count <= 0:
            raise ParameterError(f"count must be >= 1, got {count}")
        width = -(-length // count)
    else:
        width = Granularity.of(granularity).width
    k = max(1, -(-length // width))
    if count is not None and k < count:
        logger.debug("count {} over a span of {}: width {} needs only {} intervals", count, length, width, k)
    partition = Partition(t0=t_min, width=width, count=k, remainder=remainder, t_max=t_max)
    logger.debug("partition: t0={} width={} count={}", t_min, width, k)
    return partition


def discretization_level(p: Partition, exact: bool = False) -> float | Fraction:
    """1/|P|; `exact` returns a Fraction."""
    level = Fraction(1, p.count)
    return level if exact else float(level)


def _interval_ranges(stream: EventStream, p: Partition) -> tuple[np.ndarray, np.ndarray]:
    if stream.t_min < p.t0 or stream.t_max > p.t_end:
        raise CoverageError(
            f"stream [{stream.t_min}, {stream.t_max}] not covered by partition [{p.t0}, {p.t_end}]"
        )
    return p.indices_of(stream.t_start), p.indices_of(stream.t_end)


def _occupancy(stream: EventStream, p: Partition) -> np.ndarray:
    """Number of events present in each interval."""
    first, last = _interval_ranges(stream, p)
    diff = np.zeros(p.count + 1, dtype=np.int64)
    np.add.at(diff, first, 1)
    np.add.at(diff, last + 1, -1)
    return np.cumsum(diff[:-1])


def induce_snapshots(stream: EventStream, p: Partition) -> SnapshotSequence:
    """Snapshot i holds every event with t_start < tau_{i+1} and t_end >= tau_i."""
    first, last = _interval_ranges(stream, p)
    repeats = last - first + 1
    event_idx = np.repeat(np.arange(len(stream)), repeats)
    offsets = np.arange(event_idx.size) - np.repeat(np.cumsum(repeats) - repeats, repeats)
    snap_idx = first[event_idx] + offsets

    order = np.argsort(snap_idx, kind="stable")
    event_idx, snap_idx = event_idx[order], snap_idx[order]
    cuts = np.searchsorted(snap_idx, np.arange(p.count + 1))

    snapshots = []
    for i in range(p.count):
        rows = event_idx[cuts[i]:cuts[i + 1]]
        t_lo, t_hi = p.interval(i)
        snapshots.append(Snapshot(
            index=i, t_lo=t_lo, t_hi=t_hi,
            src=stream.src[rows], dst=stream.dst[rows], weight=stream.weight[rows],
            t_start=stream.t_start[rows], t_end=stream.t_end[rows],
            closed=(i == p.count - 1),
        ))
    logger.debug("induced {} snapshots from {} events", p.count, len(stream))
    return SnapshotSequence(snapshots=tuple(snapshots), partition=p)


def window_partition(stream: EventStream, p: Partition) -> Partition:
    """Intervals of `p` from the stream's first to its last occupied interval.

    Used to cut train/val/test snapshot sequences from one global partition;
    the window's interval j is the global interval `window_offset(...) + j`.
    """
    first, last = _interval_ranges(stream, p)
    lo, hi = int(first.min()), int(last.max())
    if hi == p.count - 1 and p.remainder:
        return Partition(t0=int(p.boundaries[lo]), width=p.width, count=hi - lo + 1, remainder=True, t_max=p.t_max)
    return Partition.regular(p.boundaries[lo], p.width, hi - lo + 1)


def window_offset(window: Partition, p: Partition) -> int:
    if window.width != p.width or (window.t0 - p.t0) % p.width:
        raise ParameterError("window is not aligned with the partition")
    return (window.t0 - p.t0) // p.width


def induce_window(stream: EventStream, p: Partition) -> SnapshotSequence:
    return induce_snapshots(stream, window_partition(stream, p))


def find_time_gaps(seq: SnapshotSequence) -> list[int]:
    return [snap.index for snap in seq if snap.num_edges == 0]


def count_time_gaps(stream: EventStream, p: Partition) -> int:
    """Gap count without materializing snapshots."""
    return int(np.count_nonzero(_occupancy(stream, p) == 0))


def finest_gapless_granularity(
    stream: EventStream,
    candidates: Sequence[Granularity | str | int] | None = None,
) -> GranularityChoice:
    """First candidate (finest first) whose induced snapshots have no time gap."""
    if candidates is None:
        candidates = DEFAULT_GRANULARITY_CANDIDATES
    if not candidates:
        raise ParameterError("no candidate granularities given")
    for candidate in candidates:
        granularity = Granularity.of(candidate)
        partition = make_partition(stream, granularity)
        gaps = count_time_gaps(stream, partition)
        logger.debug("granularity {}: {} snapshots, {} gaps", granularity.name, partition.count, gaps)
        if gaps == 0:
            logger.info("finest gapless granularity: {} ({} snapshots)", granularity.name, partition.count)
            return GranularityChoice(granularity, partition.count, partition)
    # a single interval is always gapless
    partition = make_partition(stream, count=1)
    fallback = Granularity(f"custom-{partition.width}", partition.width)
    logger.warning("every candidate leaves a time gap; collapsing to one snapshot")
    return GranularityChoice(fallback, 1, partition)


def snapshot_batches(seq: SnapshotSequence, offset: int = 0) -> list[Batch]:
    """Exactly one batch per snapshot, so simultaneous edges never split.

    `offset` shifts the batch snapshot indices (global index of a window).
    """
    batches = []
    for snap in seq:
        batches.append(Batch(
            src=snap.src, dst=snap.dst,
            t=np.clip(snap.t_start, snap.t_lo, snap.t_hi),
            weight=snap.weight, t_span=(snap.t_lo, snap.t_hi), snapshot_index=snap.index + offset,
        ))
    return batches


def event_batches(
    stream: EventStream,
    batch_size: int,
    respect_timestamp_boundaries: bool = False,
) -> list[Batch]:
    """Fixed-size chunks; optionally extended until the current timestamp is exhausted."""
    if batch_size < 1:
        raise ParameterError(f"batch_size must be >= 1, got {batch_size}")
    t = stream.t_start
    n = len(stream)
    batches = []
    lo = 0
    while lo < n:
        hi = min(lo + batch_size, n)
        if respect_timestamp_boundaries and hi < n:
            hi = int(np.searchsorted(t, t[hi - 1], side="right"))
        view = stream.slice(lo, hi)
        batches.append(Batch.from_stream(view, t_span=(int(t[lo]), int(t[hi - 1]))))
        lo = hi
    return batches


def interval_batches(stream: EventStream, p: Partition) -> list[Batch]:
    """One batch per interval from the stream's first to its last occupied interval."""
    idx = p.indices_of(stream.t_start)
    first, last = int(idx.min()), int(idx.max())
    cuts = np.searchsorted(idx, np.arange(first, last + 2))
    batches = []
    for k, i in enumerate(range(first, last + 1)):
        view = stream.slice(int(cuts[k]), int(cuts[k + 1]))
        batches.append(Batch.from_stream(view, snapshot_index=i, t_span=p.interval(i)))
    return batches


def snapshots_to_stream(seq: SnapshotSequence, timestamp: str = "start") -> EventStream:
    """Flatten snapshots into transient events stamped with their snapshot."""
    if timestamp not in ("start", "index"):
        raise ParameterError(f"timestamp must be 'start' or 'index', got {timestamp!r}")
    columns: list[list[np.ndarray]] = [[], [], [], []]
    for snap in seq:
        stamp = snap.t_lo if timestamp == "start" else snap.index
        columns[0].append(snap.src)
        columns[1].append(snap.dst)
        columns[2].append(np.full(snap.num_edges, stamp, dtype=np.int64))
        columns[3].append(snap.weight)
    src, dst, t, weight = (np.concatenate(c) for c in columns)
    num_nodes = int(max(src.max(), dst.max())) + 1 if src.size else None
    return validate_stream(columns=(src, dst, t, t, weight), num_nodes=num_nodes)


def snapshot_manifest(seq: SnapshotSequence) -> list[dict]:
    return [
        {"index": snap.index, "t_lo": snap.t_lo, "t_hi": snap.t_hi,
         "num_edges": snap.num_edges, "num_nodes": snap.num_nodes}
        for snap in seq
    ]


def discretize(
    stream: EventStream,
    granularity: Granularity | str | int | None = None,
    count: int | None = None,
    auto_finest: bool = False,
    candidates: Iterable[Granularity | str | int] | None = None,
) -> SnapshotSequence:
    """Partition and induce in one call; `auto_finest` picks the granularity."""
    if auto_finest:
        partition = finest_gapless_granularity(stream, list(candidates) if candidates else None).partition
    else:
        partition = make_partition(stream, granularity=granularity, count=count)
    seq = induce_snapshots(stream, partition)
    gaps = find_time_gaps(seq)
    if gaps:
        logger.warning("{} of {} snapshots are empty (time gaps)", len(gaps), len(seq))
    return seq

