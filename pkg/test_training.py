import numpy as np
import pytest
from pydantic import ValidationError

from baselines import EdgeBankScorer, LogisticScorer
from evaluation import generate_negatives, streaming_evaluate
from exceptions import TrainingError
from input_mapper import induce_window, snapshot_batches, snapshots_to_stream
from synthetic import drifting_recurrence_sequence, periodic_sequence
from training import (
    SGD,
    Adam,
    TrainConfig,
    accumulated_gradient,
    accumulated_train_epoch,
    fit,
    make_optimizer,
    select_learning_rate,
    utg_train_epoch,
)


class RecordingSGD(SGD):
    """SGD that keeps every gradient it was asked to apply."""

    def __init__(self, learning_rate):
        super().__init__(learning_rate)
        self.grads = []

    def step(self, weights, grad):
        self.grads.append(grad.copy())
        return super().step(weights, grad)


def split_sequence(seq, *cuts):
    """Cut a sequence at snapshot positions into windows of the same global partition."""
    stream = snapshots_to_stream(seq)
    counts = np.cumsum([0] + seq.edge_counts)
    edges = [int(counts[c]) for c in (0, *cuts, len(seq))]
    return [induce_window(stream.slice(lo, hi), seq.partition) for lo, hi in zip(edges, edges[1:])]


def test_two_snapshots_give_one_step():
    seq = periodic_sequence(num_snapshots=2)
    cfg = TrainConfig(epochs=1, learning_rate=0.1)
    optimizer = RecordingSGD(0.1)
    _, loss = utg_train_epoch(LogisticScorer(2), seq, cfg, optimizer=optimizer)
    assert len(optimizer.grads) == 1
    assert np.isfinite(loss)


def test_zero_learning_rate_keeps_weights():
    seq = periodic_sequence(num_snapshots=6, num_nodes=4, noise_edges=2, width=5)
    cfg = TrainConfig(epochs=1, learning_rate=0.0)
    start = np.array([0.3, -0.1, 0.2, 0.0, 0.5])
    for epoch in (utg_train_epoch, accumulated_train_epoch):
        scorer, loss = epoch(LogisticScorer(4, weights=start), seq, cfg)
        assert scorer.weights.tolist() == start.tolist()
        assert np.isfinite(loss)


def test_zero_learning_rate_losses_match_between_modes():
    seq = drifting_recurrence_sequence(num_nodes=20, num_snapshots=10, period=3, edges_per_block=8, seed=1)
    cfg = TrainConfig(epochs=3, learning_rate=0.0)
    per_snapshot = LogisticScorer(20, weights=np.full(5, 0.1))
    accumulated = LogisticScorer(20, weights=np.full(5, 0.1))
    for epoch in range(3):
        _, a = utg_train_epoch(per_snapshot, seq, cfg, epoch)
        _, b = accumulated_train_epoch(accumulated, seq, cfg, epoch)
        assert a == b


def test_accumulated_gradient_is_the_sum_of_snapshot_gradients():
    seq = drifting_recurrence_sequence(num_nodes=20, num_snapshots=12, period=4, edges_per_block=10, seed=2)
    cfg = TrainConfig(epochs=1, learning_rate=0.0, negatives_per_positive=2)
    start = np.array([0.1, 0.4, -0.3, 0.2, 0.05])
    recorder = RecordingSGD(0.0)
    utg_train_epoch(LogisticScorer(20, weights=start), seq, cfg, optimizer=recorder)
    total, _ = accumulated_gradient(LogisticScorer(20, weights=start), seq, cfg)
    assert len(recorder.grads) == len(seq) - 1
    assert np.allclose(total, np.sum(recorder.grads, axis=0), rtol=1e-12, atol=1e-14)


def test_modes_agree_on_two_snapshots():
    seq = periodic_sequence(num_snapshots=2, num_nodes=3, noise_edges=2, seed=4)
    cfg = TrainConfig(epochs=1, learning_rate=0.2)
    a, loss_a = utg_train_epoch(LogisticScorer(3), seq, cfg)
    b, loss_b = accumulated_train_epoch(LogisticScorer(3), seq, cfg)
    assert np.allclose(a.weights, b.weights)
    assert loss_a == loss_b


def test_loss_decreases_on_a_periodic_graph():
    seq = periodic_sequence(num_snapshots=10)
    cfg = TrainConfig(epochs=5, learning_rate=0.05)
    scorer = LogisticScorer(2)
    optimizer = make_optimizer(cfg)
    losses = [utg_train_epoch(scorer, seq, cfg, epoch, optimizer)[1] for epoch in range(5)]
    assert all(later < earlier for earlier, later in zip(losses, losses[1:]))


def test_training_needs_a_trainable_model_and_two_snapshots():
    cfg = TrainConfig(epochs=1)
    with pytest.raises(TrainingError):
        utg_train_epoch(EdgeBankScorer(2), periodic_sequence(num_snapshots=3), cfg)
    with pytest.raises(TrainingError):
        utg_train_epoch(LogisticScorer(2), periodic_sequence(num_snapshots=1), cfg)


def test_patience_zero_stops_after_first_stale_epoch():
    train, val = split_sequence(periodic_sequence(num_snapshots=12), 8)
    cfg = TrainConfig(epochs=10, patience=0, learning_rate=0.05)
    scorer, report = fit(LogisticScorer(2), train, val, cfg)
    assert report.best_epoch == 0
    assert report.best_val_mrr == 1.0
    assert report.epochs_run == 2
    assert report.stopped_early
    assert scorer.weights.tolist() == report.weights
    assert scorer.observed_through == -1


def test_fit_is_deterministic():
    seq = drifting_recurrence_sequence(num_nodes=30, num_snapshots=20, period=4, edges_per_block=10, seed=5)
    train, val = split_sequence(seq, 15)
    cfg = TrainConfig(epochs=4, learning_rate=0.01, seed=9)
    first = fit(LogisticScorer(30), train, val, cfg)[1].to_dict()
    second = fit(LogisticScorer(30), train, val, cfg)[1].to_dict()
    assert first == second
    assert [row["epoch"] for row in first["per_epoch"]] == list(range(first["epochs_run"]))


def test_adam_first_step_moves_each_weight_by_the_learning_rate():
    optimizer = make_optimizer(TrainConfig(epochs=1, optimizer="adam", learning_rate=0.1))
    assert isinstance(optimizer, Adam)
    w = optimizer.step(np.zeros(3), np.array([2.0, -0.5, 0.0]))
    assert w == pytest.approx([-0.1, 0.1, 0.0], abs=1e-6)


def test_select_learning_rate():
    train, val = split_sequence(periodic_sequence(num_snapshots=12), 8)
    cfg = TrainConfig(epochs=3)
    rate, scorer, report = select_learning_rate(lambda: LogisticScorer(2), train, val, cfg, rates=[0.0, 0.05])
    assert rate == 0.05
    assert report.best_val_mrr == 1.0
    assert report.learning_rate == 0.05

    rate, _, _ = select_learning_rate(lambda: LogisticScorer(2), train, val, cfg, rates=[0.05, 0.1])
    assert rate == 0.05
    with pytest.raises(TrainingError):
        select_learning_rate(lambda: LogisticScorer(2), train, val, cfg, rates=[])


def test_train_config_validation():
    assert TrainConfig(mode="utg").mode == "per_snapshot"
    assert TrainConfig(epochs=5).patience == 5
    assert TrainConfig(epochs=50).patience == 20
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=-0.1)
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=float("inf"))
    with pytest.raises(ValidationError):
        TrainConfig(epochs=3, patience=5)
    with pytest.raises(ValidationError):
        TrainConfig(mode="full_batch")


def test_per_snapshot_training_is_not_worse_on_drifting_recurrence():
    diffs = []
    for seed in range(5):
        seq = drifting_recurrence_sequence(num_nodes=50, num_snapshots=40, period=5, edges_per_block=20, seed=seed)
        train, val, test = split_sequence(seq, 28, 34)
        history = snapshot_batches(train) + snapshot_batches(val, offset=28)
        test_batches = snapshot_batches(test, offset=34)
        negatives = generate_negatives(
            snapshots_to_stream(train), snapshots_to_stream(test), q=49, seed=seed, num_nodes=50
        )
        mrr = {}
        for mode in ("per_snapshot", "accumulated"):
            cfg = TrainConfig(epochs=5, learning_rate=0.01, mode=mode, seed=seed)
            scorer, _ = fit(LogisticScorer(50), train, val, cfg)
            scorer.observe_all(history)
            mrr[mode] = streaming_evaluate(scorer, test_batches, negatives).mrr
        diffs.append(mrr["per_snapshot"] - mrr["accumulated"])
    assert np.mean(diffs) >= 0.0
