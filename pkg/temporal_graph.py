"""
Core temporal graph data model

Event streams (continuous-time dynamic graphs) and snapshot sequences
(discrete-time dynamic graphs) share one vocabulary: integer node ids and
raw integer timestamps. Normalized time is a view computed on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Any, Iterable, Iterator, NewType, Sequence

import numpy as np
from loguru import logger

from exceptions import EmptyStreamError, StreamValidationError, TimeRangeError

if TYPE_CHECKING:
    from input_mapper import Partition

NormalizedTime = NewType("NormalizedTime", float)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Event:
    """One timestamped directed edge."""

    src: int
    dst: int
    t_start: int
    t_end: int
    weight: float = 1.0

    def __post_init__(self):
        if self.src < 0 or self.dst < 0:
            raise StreamValidationError(f"negative node id in {self}")
        if self.t_start > self.t_end:
            raise StreamValidationError(f"t_start > t_end in {self}")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.src, self.dst)


@dataclass(frozen=True, eq=False)
class EventStream:
    """Chronologically sorted events stored column-wise.

    Columns are read-only numpy arrays. `num_nodes` is the size of the node
    universe and is shared by every view sliced from the stream.
    """

    src: np.ndarray
    dst: np.ndarray
    t_start: np.ndarray
    t_end: np.ndarray
    weight: np.ndarray
    num_nodes: int
    transient: bool

    def __len__(self) -> int:
        return int(self.src.shape[0])

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.transient == other.transient
            and all(
                np.array_equal(getattr(self, name), getattr(other, name))
                for name in ("src", "dst", "t_start", "t_end", "weight")
            )
        )

    __hash__ = None  # type: ignore[assignment]

    @cached_property
    def events(self) -> list[Event]:
        return [
            Event(int(s), int(d), int(ts), int(te), float(w))
            for s, d, ts, te, w in zip(
                self.src.tolist(), self.dst.tolist(), self.t_start.tolist(),
                self.t_end.tolist(), self.weight.tolist(),
            )
        ]

    @cached_property
    def t_min(self) -> int:
        return int(self.t_start.min())

    @cached_property
    def t_max(self) -> int:
        return int(self.t_end.max())

    @property
    def span(self) -> int:
        return self.t_max - self.t_min

    def pair_keys(self, num_nodes: int | None = None) -> np.ndarray:
        """Encode (src, dst) as a single int64 key."""
        n = self.num_nodes if num_nodes is None else num_nodes
        return self.src.astype(np.int64) * np.int64(n) + self.dst.astype(np.int64)

    def unique_pairs(self) -> int:
        return int(np.unique(self.pair_keys()).size)

    def slice(self, lo: int, hi: int) -> EventStream:
        """Contiguous view of events [lo, hi); the node universe is kept."""
        sl = slice(lo, hi)
        return EventStream(
            src=self.src[sl], dst=self.dst[sl], t_start=self.t_start[sl],
            t_end=self.t_end[sl], weight=self.weight[sl],
            num_nodes=self.num_nodes, transient=self.transient,
        )

    def take(self, indices: np.ndarray) -> EventStream:
        return EventStream(
            src=_frozen(self.src[indices]), dst=_frozen(self.dst[indices]),
            t_start=_frozen(self.t_start[indices]), t_end=_frozen(self.t_end[indices]),
            weight=_frozen(self.weight[indices]),
            num_nodes=self.num_nodes, transient=self.transient,
        )


def _columns_from_rows(events: Iterable[Any]) -> tuple[np.ndarray, ...]:
    src, dst, t_start, t_end, weight = [], [], [], [], []
    for row in events:
        if isinstance(row, Event):
            row = (row.src, row.dst, row.t_start, row.t_end, row.weight)
        if len(row) == 3:
            s, d, ts = row
            te, w = ts, 1.0
        elif len(row) == 4:
            s, d, ts, te = row
            w = 1.0
        elif len(row) == 5:
            s, d, ts, te, w = row
        else:
            raise StreamValidationError(f"expected 3 to 5 fields per event, got {len(row)}")
        src.append(s)
        dst.append(d)
        t_start.append(ts)
        t_end.append(te)
        weight.append(w)
    return (
        np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64),
        np.asarray(t_start, dtype=np.int64), np.asarray(t_end, dtype=np.int64),
        np.asarray(weight, dtype=np.float64),
    )


def validate_stream(
    events: Iterable[Any] | None = None,
    *,
    columns: Sequence[np.ndarray] | None = None,
    num_nodes: int | None = None,
) -> EventStream:
    """Build a validated, stably sorted EventStream.

    `events` may hold Event objects or (src, dst, t_start[, t_end[, weight]])
    tuples. Column arrays can be passed instead through `columns`.
    """
    if columns is not None:
        src, dst, t_start, t_end, weight = (np.asarray(c) for c in columns)
        src, dst = src.astype(np.int64), dst.astype(np.int64)
        t_start, t_end = t_start.astype(np.int64), t_end.astype(np.int64)
        weight = weight.astype(np.float64)
    else:
        src, dst, t_start, t_end, weight = _columns_from_rows(events or ())

    if src.size == 0:
        raise EmptyStreamError("cannot build a stream from zero events")

    bad = np.flatnonzero(t_start > t_end)
    if bad.size:
        raise StreamValidationError(
            f"{bad.size} event(s) have t_start > t_end: indices {bad[:20].tolist()}", bad.tolist()
        )
    bad = np.flatnonzero((src < 0) | (dst < 0) | (t_start < 0))
    if bad.size:
        raise StreamValidationError(
            f"{bad.size} event(s) have negative ids or timestamps: indices {bad[:20].tolist()}",
            bad.tolist(),
        )

    if np.any(t_start[1:] < t_start[:-1]):
        order = np.argsort(t_start, kind="stable")
        src, dst, t_start, t_end, weight = (a[order] for a in (src, dst, t_start, t_end, weight))

    universe = int(max(src.max(), dst.max())) + 1
    if num_nodes is None:
        num_nodes = universe
    elif num_nodes < universe:
        raise StreamValidationError(f"num_nodes={num_nodes} but node id {universe - 1} is present")

    transient = bool(np.array_equal(t_start, t_end))
    stream = EventStream(
        src=_frozen(src.copy()), dst=_frozen(dst.copy()), t_start=_frozen(t_start.copy()),
        t_end=_frozen(t_end.copy()), weight=_frozen(weight.copy()),
        num_nodes=int(num_nodes), transient=transient,
    )
    logger.debug(
        "validated stream: {} events, {} nodes, t=[{}, {}], transient={}",
        len(stream), stream.num_nodes, stream.t_min, stream.t_max, transient,
    )
    return stream


def normalize_time(t: int, stream: EventStream) -> NormalizedTime:
    """Map a raw timestamp in [t_min, t_max] onto [0, 1]."""
    t_min, t_max = stream.t_min, stream.t_max
    if not t_min <= t <= t_max:
        raise TimeRangeError(f"t={t} outside [{t_min}, {t_max}]")
    if t_max == t_min:
        return NormalizedTime(0.0)
    return NormalizedTime((t - t_min) / (t_max - t_min))


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Graph induced by one partition interval [t_lo, t_hi).

    The last snapshot of a sequence is closed on the right (`closed` is True).
    Edge columns keep the originating events' timestamps.
    """

    index: int
    t_lo: int
    t_hi: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    t_start: np.ndarray
    t_end: np.ndarray
    closed: bool = False
    nodes: frozenset[int] = field(default=frozenset())

    def __post_init__(self):
        if self.t_lo >= self.t_hi:
            raise TimeRangeError(f"snapshot {self.index}: empty interval [{self.t_lo}, {self.t_hi})")
        endpoints = set(self.src.tolist()) | set(self.dst.tolist())
        if not endpoints <= self.nodes:
            object.__setattr__(self, "nodes", frozenset(self.nodes | endpoints))

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()))

    def contains(self, t: int) -> bool:
        return self.t_lo <= t < self.t_hi or (self.closed and t == self.t_hi)


@dataclass(frozen=True)
class SnapshotSequence:
    snapshots: tuple[Snapshot, ...]
    partition: Partition

    def __post_init__(self):
        boundaries = self.partition.boundaries
        if len(self.snapshots) != self.partition.count:
            raise TimeRangeError(
                f"{len(self.snapshots)} snapshots for a partition of {self.partition.count} intervals"
            )
        for i, snap in enumerate(self.snapshots):
            if snap.index != i:
                raise TimeRangeError(f"snapshot at position {i} has index {snap.index}")
            if snap.t_lo != boundaries[i] or snap.t_hi != boundaries[i + 1]:
                raise TimeRangeError(f"snapshot {i} does not match partition interval {i}")

    def __len__(self) -> int:
        return len(self.snapshots)

    def __iter__(self) -> Iterator[Snapshot]:
        return iter(self.snapshots)

    def __getitem__(self, index: int) -> Snapshot:
        return self.snapshots[index]

    @property
    def edge_counts(self) -> list[int]:
        return [snap.num_edges for snap in self.snapshots]

    def window(self, lo: int, hi: int) -> list[Snapshot]:
        return list(self.snapshots[lo:hi])
