"""
Output mapper

Zero-order hold: a per-snapshot prediction is broadcast as a constant
over its snapshot's time interval so snapshot scorers can answer
continuous-time link queries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from exceptions import ParameterError, ProtocolError
from input_mapper import Partition, snapshot_batches
from temporal_graph import SnapshotSequence

if TYPE_CHECKING:
    from baselines import EdgeScorer


@dataclass(frozen=True, eq=False)
class HeldSignal:
    values: np.ndarray
    partition: Partition

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.partition.count,):
            raise ParameterError(
                f"{values.shape[0] if values.ndim else 0} values for {self.partition.count} intervals"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def snapshot_index_of(t: int, p: Partition) -> int:
    """Interval i with tau_i <= t < tau_{i+1}; t == tau_k maps to the last interval."""
    return p.index_of(t)


def zoh_query(sig: HeldSignal, t: int) -> float:
    return float(sig.values[snapshot_index_of(t, sig.partition)])


def zoh_query_many(sig: HeldSignal, t: np.ndarray) -> np.ndarray:
    return sig.values[sig.partition.indices_of(t)]


def continuous_link_query(model: EdgeScorer, s: int, d: int, t: int, p: Partition) -> float:
    """Score link (s, d) at time t from the model's prediction for t's interval.

    The model must have observed every snapshot before t's interval and none
    after it; the score is evaluated at the interval start so it is constant
    within the interval.
    """
    i = snapshot_index_of(t, p)
    if model.observed_through != i - 1:
        raise ProtocolError(
            f"query at t={t} (snapshot {i}) needs state through snapshot {i - 1}, "
            f"model has observed through {model.observed_through}"
        )
    t_lo = int(p.boundaries[i])
    scores = model.score_batch(np.array([s]), np.array([d]), np.array([t_lo]))
    return float(scores[0])


def held_signal_for_pair(model: EdgeScorer, seq: SnapshotSequence, s: int, d: int) -> HeldSignal:
    """Per-snapshot predictions for (s, d), computed predict-then-update on a copy of `model`."""
    walker = model.copy()
    walker.reset_state()
    walker.unfreeze()
    values = np.empty(len(seq), dtype=np.float64)
    for i, batch in enumerate(snapshot_batches(seq)):
        values[i] = continuous_link_query(walker, s, d, batch.t_span[0], seq.partition)
        walker.observe(batch)
    return HeldSignal(values=values, partition=seq.partition)
