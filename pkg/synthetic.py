"""Seeded synthetic temporal graphs for tests, examples and sanity runs."""

from __future__ import annotations

import numpy as np

from config import GRANULARITIES
from exceptions import ParameterError
from input_mapper import Partition, induce_snapshots
from temporal_graph import EventStream, SnapshotSequence, validate_stream


def random_stream(
    num_nodes: int,
    num_events: int,
    t_span: int,
    seed: int = 0,
    persistent: bool = False,
) -> EventStream:
    """Uniform random edges with timestamps in [0, t_span].

    `persistent` gives each event a random duration of up to a tenth of the span.
    """
    if num_nodes < 1 or num_events < 1 or t_span < 0:
        raise ParameterError("random_stream needs num_nodes >= 1, num_events >= 1 and t_span >= 0")
    rng = np.random.default_rng(seed)
    src = rng.integers(0, num_nodes, size=num_events)
    dst = rng.integers(0, num_nodes, size=num_events)
    t_start = rng.integers(0, t_span + 1, size=num_events)
    if persistent:
        t_end = np.minimum(t_start + rng.integers(0, t_span // 10 + 1, size=num_events), t_span)
    else:
        t_end = t_start
    return validate_stream(columns=(src, dst, t_start, t_end, np.ones(num_events)), num_nodes=num_nodes)


def hourly_stream(hours: int, events_per_hour: int = 3, num_nodes: int = 100, seed: int = 0) -> EventStream:
    """Events in every hour of [0, hours*3600), the first at 0 and the last at the final second."""
    if hours < 1 or events_per_hour < 1:
        raise ParameterError("hourly_stream needs hours >= 1 and events_per_hour >= 1")
    hour = GRANULARITIES["hour"]
    rng = np.random.default_rng(seed)
    offsets = rng.integers(0, hour, size=(hours, events_per_hour))
    offsets[0, 0] = 0
    offsets[-1, -1] = hour - 1
    t = (np.arange(hours)[:, None] * hour + offsets).ravel()
    m = t.size
    src = rng.integers(0, num_nodes, size=m)
    dst = rng.integers(0, num_nodes, size=m)
    return validate_stream(columns=(src, dst, t, t, np.ones(m)), num_nodes=num_nodes)


def _sequence(src: list, dst: list, t: list, num_nodes: int, width: int, num_snapshots: int) -> SnapshotSequence:
    stream = validate_stream(
        columns=(np.asarray(src), np.asarray(dst), np.asarray(t), np.asarray(t), np.ones(len(src))),
        num_nodes=num_nodes,
    )
    # t0 = 0 even when the first snapshots are empty
    return induce_snapshots(stream, Partition.regular(0, width, num_snapshots))


def periodic_sequence(
    num_snapshots: int,
    num_nodes: int = 2,
    noise_edges: int = 0,
    width: int = 1,
    seed: int = 0,
) -> SnapshotSequence:
    """Pair (0, 1) in every snapshot, plus `noise_edges` random pairs per snapshot."""
    if num_nodes < 2:
        raise ParameterError("periodic_sequence needs at least 2 nodes")
    rng = np.random.default_rng(seed)
    src, dst, t = [], [], []
    for i in range(num_snapshots):
        src.append(0)
        dst.append(1)
        t.append(i * width)
        for _ in range(noise_edges):
            src.append(int(rng.integers(0, num_nodes)))
            dst.append(int(rng.integers(0, num_nodes)))
            t.append(i * width + int(rng.integers(0, width)))
    return _sequence(src, dst, t, num_nodes, width, num_snapshots)


def drifting_recurrence_sequence(
    num_nodes: int = 50,
    num_snapshots: int = 40,
    period: int = 5,
    edges_per_block: int = 20,
    seed: int = 0,
) -> SnapshotSequence:
    """A random edge set repeated for `period` snapshots, then replaced by a new one."""
    if period < 1 or edges_per_block < 1:
        raise ParameterError("drifting_recurrence_sequence needs period >= 1 and edges_per_block >= 1")
    rng = np.random.default_rng(seed)
    src, dst, t = [], [], []
    block_src = block_dst = None
    for i in range(num_snapshots):
        if i % period == 0:
            block_src = rng.integers(0, num_nodes, size=edges_per_block)
            block_dst = (block_src + rng.integers(1, num_nodes, size=edges_per_block)) % num_nodes
        src.extend(block_src.tolist())
        dst.extend(block_dst.tolist())
        t.extend([i] * edges_per_block)
    return _sequence(src, dst, t, num_nodes, 1, num_snapshots)
