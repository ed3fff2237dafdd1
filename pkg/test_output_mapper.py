import numpy as np
import pytest

from baselines import EdgeBankScorer, LogisticScorer
from exceptions import ParameterError, ProtocolError, TimeRangeError
from input_mapper import Partition, snapshot_batches
from output_mapper import (
    HeldSignal,
    continuous_link_query,
    held_signal_for_pair,
    snapshot_index_of,
    zoh_query,
    zoh_query_many,
)
from synthetic import periodic_sequence


def test_snapshot_index_of():
    p = Partition.regular(0, 6, 3)
    assert snapshot_index_of(7, p) == 1
    assert snapshot_index_of(0, p) == 0
    assert snapshot_index_of(18, p) == 2
    with pytest.raises(TimeRangeError):
        snapshot_index_of(19, p)
    with pytest.raises(TimeRangeError):
        snapshot_index_of(-1, p)


def test_zoh_query():
    sig = HeldSignal(np.array([0.2, 0.9]), Partition.regular(0, 10, 2))
    assert zoh_query(sig, 10) == 0.9
    assert zoh_query(sig, 15) == zoh_query(sig, 19) == 0.9
    assert zoh_query(sig, 20) == 0.9

    sig = HeldSignal(np.array([0.1, 0.5, 0.7]), Partition.regular(0, 4, 3))
    assert [zoh_query(sig, t) for t in sig.partition.boundaries.tolist()] == [0.1, 0.5, 0.7, 0.7]


def test_held_signal_length_must_match():
    with pytest.raises(ParameterError):
        HeldSignal(np.array([0.1, 0.2]), Partition.regular(0, 1, 3))


def test_piecewise_constant_over_random_partitions():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        t0 = int(rng.integers(0, 1000))
        width = int(rng.integers(1, 50))
        count = int(rng.integers(1, 20))
        p = Partition.regular(t0, width, count)
        sig = HeldSignal(rng.random(count), p)
        bounds = p.boundaries.tolist()
        for i in range(count):
            lo, hi = bounds[i], bounds[i + 1]
            a, b = rng.integers(lo, hi, size=2).tolist()
            assert zoh_query(sig, a) == zoh_query(sig, b) == sig.values[i]
            assert snapshot_index_of(lo, p) == i
        assert snapshot_index_of(bounds[-1], p) == count - 1
        everything = np.arange(bounds[0], bounds[-1] + 1)
        assert np.array_equal(zoh_query_many(sig, everything), sig.values[p.indices_of(everything)])


def test_continuous_query_after_observation():
    seq = periodic_sequence(num_snapshots=3, num_nodes=3, width=10)
    batches = snapshot_batches(seq)
    bank = EdgeBankScorer(3)
    bank.observe(batches[0])
    assert continuous_link_query(bank, 0, 1, 12, seq.partition) == 1.0
    assert continuous_link_query(bank, 1, 2, 19, seq.partition) == 0.0


def test_stale_state_is_rejected():
    seq = periodic_sequence(num_snapshots=3, num_nodes=3, width=10)
    bank = EdgeBankScorer(3)
    with pytest.raises(ProtocolError):
        continuous_link_query(bank, 0, 1, 25, seq.partition)
    for batch in snapshot_batches(seq):
        bank.observe(batch)
    with pytest.raises(ProtocolError):
        continuous_link_query(bank, 0, 1, 25, seq.partition)


def test_logistic_query_matches_snapshot_score():
    seq = periodic_sequence(num_snapshots=4, num_nodes=4, noise_edges=2, width=10, seed=2)
    model = LogisticScorer(4, weights=np.array([0.1, 0.5, 1.0, -0.2, 0.3]))
    batches = snapshot_batches(seq)
    model.observe_all(batches[:2])
    direct = model.score_batch(np.array([0]), np.array([1]), np.array([20]))[0]
    for t in (20, 23, 29):
        assert continuous_link_query(model, 0, 1, t, seq.partition) == direct


def test_held_signal_for_pair_leaves_model_untouched():
    seq = periodic_sequence(num_snapshots=5, num_nodes=3, width=2)
    bank = EdgeBankScorer(3)
    before = bank.state_checksum()
    sig = held_signal_for_pair(bank, seq, 0, 1)
    assert sig.values.tolist() == [0.0, 1.0, 1.0, 1.0, 1.0]
    assert bank.state_checksum() == before
    assert bank.observed_through == -1
