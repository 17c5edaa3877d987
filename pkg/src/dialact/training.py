"""Training loops, the expected-cost sequence loss, and evaluation.

Evaluation follows the last-label protocol: the model predicts a label for
every utterance in a window but only the final position is scored, so every
utterance of the corpus is scored exactly once (each is the last element of
exactly one window).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .autodiff import Node, backward, constant, matmul, softmax, stack
from .config import TrainConfig
from .corpus import EncodedWindow
from .model import optimizer_step
from .optim import LrScheduler, clip_grad_norm
from .search import BeamConfig, beam_search

__all__ = [
    "EvalReport",
    "TrainResult",
    "evaluate",
    "finetune_risk",
    "risk_loss",
    "token_nll_loss",
    "train",
    "write_metrics",
]

METRICS_HEADER = "epoch\ttrain_loss\tdev_accuracy\tlr"


def token_nll_loss(model, window: EncodedWindow, train: bool = False, rng=None) -> Node:
    """Teacher-forced negative log-likelihood, averaged per position."""
    return model.token_nll(window, train=train, rng=rng)


def risk_loss(
    candidates: Sequence[tuple[tuple[int, ...], Node]],
    gold: tuple[int, ...] | list[int],
    cost: str = "sequence",
) -> Node:
    """Expected cost of the candidate set under renormalized model
    probabilities.

    Each candidate is (label sequence, log-probability node). With the
    default all-or-nothing cost the loss is the renormalized probability
    mass on wrong sequences, which lives in [0, 1]; "hamming" scores the
    fraction of mismatched positions instead.
    """
    if not candidates:
        raise ValueError("risk_loss: empty candidate set")
    gold_t = tuple(int(g) for g in gold)
    costs = np.zeros(len(candidates))
    for i, (labels, _) in enumerate(candidates):
        if cost == "sequence":
            costs[i] = 0.0 if tuple(labels) == gold_t else 1.0
        elif cost == "hamming":
            costs[i] = sum(a != b for a, b in zip(labels, gold_t)) / len(gold_t)
        else:
            raise ValueError(f"unknown risk cost {cost!r}")
    weights = softmax(stack([lp for _, lp in candidates]))
    return matmul(weights, constant(costs))


@dataclass
class EvalReport:
    """Last-label accuracy plus confusion counts over (gold, predicted)."""

    accuracy: float
    confusion: dict[tuple[int, int], int]
    n_windows: int
    seed: int = 0

    def confusion_matrix(self, n_labels: int) -> np.ndarray:
        out = np.zeros((n_labels, n_labels), dtype=np.int64)
        for (g, p), c in self.confusion.items():
            out[g, p] = c
        return out


def evaluate(
    model,
    windows: Sequence[EncodedWindow],
    beam: BeamConfig | None = None,
    seed: int = 0,
) -> EvalReport:
    """Score the last position of every window under the model's decoder
    (beam search for seq2seq, Viterbi for the CRF). `seed` only stamps the
    report; evaluation itself is deterministic."""
    confusion: dict[tuple[int, int], int] = {}
    correct = 0
    for window in windows:
        predicted, _ = model.predict_labels(window, beam)
        gold = window.label_ids[-1]
        pred = predicted[-1]
        confusion[(gold, pred)] = confusion.get((gold, pred), 0) + 1
        if pred == gold:
            correct += 1
    n = len(windows)
    return EvalReport(
        accuracy=correct / n if n else 0.0, confusion=confusion, n_windows=n, seed=seed
    )


@dataclass
class TrainResult:
    metrics: list[tuple[int, float, float, float]]  # (epoch, train_loss, dev_acc, lr)
    best_accuracy: float
    best_params: dict[str, np.ndarray] = field(repr=False, default_factory=dict)

    @property
    def epochs_run(self) -> int:
        return len(self.metrics)


def _run_epochs(model, train_windows, dev_windows, cfg: TrainConfig, loss_fn) -> TrainResult:
    rng = np.random.default_rng(cfg.seed)
    scheduler = LrScheduler(cfg.lr, cfg.scheduler_patience, cfg.scheduler_factor)
    dev_beam = BeamConfig(width=cfg.beam_infer, alpha=cfg.length_alpha)

    best_acc = -1.0
    best_params = model.store.snapshot()
    metrics: list[tuple[int, float, float, float]] = []

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train_windows))
        lr = scheduler.lr
        total = 0.0
        for base in range(0, len(order), cfg.batch_size):
            batch = [train_windows[i] for i in order[base : base + cfg.batch_size]]
            model.store.zero_grad()
            losses = [loss_fn(model, w, rng) for w in batch]
            batch_loss = losses[0] if len(losses) == 1 else _mean(losses)
            if not np.isfinite(batch_loss.value):
                raise RuntimeError(
                    f"non-finite loss {batch_loss.value!r} at epoch {epoch}, "
                    f"batch starting at {base}"
                )
            backward(batch_loss)
            grads = model.store.grads()
            clip_grad_norm(grads, cfg.grad_clip)
            optimizer_step(model, grads, lr)
            total += float(batch_loss.value) * len(batch)
        train_loss = total / len(train_windows)

        report = evaluate(model, dev_windows, dev_beam)
        acc = report.accuracy
        if acc > best_acc:
            best_acc = acc
            best_params = model.store.snapshot()
        metrics.append((epoch, train_loss, acc, lr))
        scheduler.step(acc)
        if cfg.stop_accuracy and best_acc >= cfg.stop_accuracy:
            break

    model.store.load(best_params)
    return TrainResult(metrics=metrics, best_accuracy=best_acc, best_params=best_params)


def _mean(losses: list[Node]) -> Node:
    total = losses[0]
    for term in losses[1:]:
        total = total + term
    return total / len(losses)


def train(model, train_windows, dev_windows, cfg: TrainConfig) -> TrainResult:
    """Token-level training: shuffle, batch, clip, optimizer step, one
    scheduler step per epoch on dev accuracy. The best-dev parameters are
    restored into the model before returning."""

    def loss_fn(m, window, rng):
        return m.token_nll(window, train=True, rng=rng)

    return _run_epochs(model, train_windows, dev_windows, cfg, loss_fn)


def finetune_risk(model, train_windows, dev_windows, cfg: TrainConfig) -> TrainResult:
    """Sequence-level fine-tuning: minimize the expected cost over beam
    candidates (width `beam_train`), starting from token-level weights."""
    beam = BeamConfig(width=cfg.beam_train, alpha=cfg.length_alpha)

    def loss_fn(m, window, rng):
        hyps = beam_search(m, window, beam)
        enc = m.encode(window, train=True, rng=rng)
        candidates = [
            (h.labels, m.sequence_logprob(window, h.labels, enc=enc, train=True, rng=rng))
            for h in hyps
        ]
        return risk_loss(candidates, window.label_ids, cfg.risk_cost)

    return _run_epochs(model, train_windows, dev_windows, cfg, loss_fn)


def write_metrics(rows: Sequence[tuple[int, float, float, float]], fp: IO[str]) -> None:
    fp.write(METRICS_HEADER + "\n")
    for epoch, loss, acc, lr in rows:
        fp.write(f"{epoch}\t{loss:.17g}\t{acc:.17g}\t{lr:.17g}\n")
