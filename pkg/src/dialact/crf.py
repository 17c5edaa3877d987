"""Linear-chain CRF over per-position label scores.

Potentials factor as exp(unary + pairwise transition), with an optional
start-score vector for the first position. Training goes through the
forward (log-sum-exp) dynamic program so gradients flow into both the
score projections and the transition table; decoding is Viterbi.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Node, logsumexp, pick, pick2, reshape

__all__ = [
    "crf_gold_score",
    "crf_log_partition",
    "crf_nll",
    "viterbi_decode",
]


def crf_log_partition(
    unaries: list[Node],
    transitions: Node,
    start: Node | None = None,
) -> Node:
    """log Z over all label paths, by the forward algorithm.

    ``unaries`` is one score vector per position; ``transitions[p, q]`` scores
    a step from label p to label q.
    """
    if not unaries:
        raise ValueError("crf_log_partition: need at least one position")
    n_labels = unaries[0].value.shape[0]
    alpha = unaries[0] if start is None else unaries[0] + start
    for t in range(1, len(unaries)):
        # alpha[p] broadcast down columns: M[p, q] = alpha[p] + transitions[p, q]
        m = reshape(alpha, (n_labels, 1)) + transitions
        alpha = unaries[t] + logsumexp(m, axis=0)
    return logsumexp(alpha)


def crf_gold_score(
    unaries: list[Node],
    transitions: Node,
    labels: tuple[int, ...] | list[int],
    start: Node | None = None,
) -> Node:
    """Unnormalized score of one label path."""
    if len(labels) != len(unaries):
        raise ValueError(f"got {len(labels)} labels for {len(unaries)} positions")
    score = pick(unaries[0], int(labels[0]))
    if start is not None:
        score = score + pick(start, int(labels[0]))
    for t in range(1, len(unaries)):
        score = score + pick(unaries[t], int(labels[t]))
        score = score + pick2(transitions, int(labels[t - 1]), int(labels[t]))
    return score


def crf_nll(
    unaries: list[Node],
    transitions: Node,
    labels: tuple[int, ...] | list[int],
    start: Node | None = None,
) -> Node:
    """Negative log-likelihood: log Z minus the gold-path score."""
    return crf_log_partition(unaries, transitions, start) - crf_gold_score(
        unaries, transitions, labels, start
    )


def viterbi_decode(
    unary: np.ndarray,
    transitions: np.ndarray,
    start: np.ndarray | None = None,
) -> list[int]:
    """Highest-scoring label path; ties resolve to the lowest label index.

    ``unary`` is (length, n_labels); plain arrays, no graph.
    """
    unary = np.asarray(unary, dtype=np.float64)
    if unary.ndim != 2 or unary.shape[0] < 1:
        raise ValueError(f"viterbi_decode: unary must be (length, n_labels), got {unary.shape}")
    length, n_labels = unary.shape

    best = unary[0].copy()
    if start is not None:
        best = best + start
    backptr = np.zeros((length, n_labels), dtype=np.intp)
    for t in range(1, length):
        # candidate[p, q]: best path ending in p, then p -> q
        cand = best[:, None] + transitions
        backptr[t] = cand.argmax(axis=0)  # argmax takes the first max: lowest p
        best = cand.max(axis=0) + unary[t]

    path = [int(best.argmax())]
    for t in range(length - 1, 0, -1):
        path.append(int(backptr[t, path[-1]]))
    path.reverse()
    return path
