"""Beam search with length normalization, greedy decoding, and an exhaustive
decoder used as a verification oracle.

All three run against a model's decode session: an object with ``length``,
``n_labels``, ``start_state`` and ``step(state, prev_label) -> (logprobs,
next_state)`` where ``prev_label=None`` means the start symbol. Decoding
length is fixed to the window length (one label per utterance), so there is
no finished/unfinished bookkeeping and every hypothesis at a step has the
same length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

__all__ = [
    "BeamConfig",
    "Hypothesis",
    "beam_search",
    "exhaustive_decode",
    "greedy_decode",
    "length_penalty",
]


def length_penalty(length: int, alpha: float) -> float:
    """lp(y) = (5 + |y|)^alpha / 6^alpha; equals 1 at length 1 or alpha 0."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    return (5.0 + length) ** alpha / 6.0**alpha


@dataclass
class BeamConfig:
    width: int = 1
    alpha: float = 0.65

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"beam width must be >= 1, got {self.width}")
        if self.alpha < 0.0:
            raise ValueError(f"length-penalty exponent must be >= 0, got {self.alpha}")


@dataclass
class Hypothesis:
    """A label prefix with its cumulative and length-normalized scores."""

    labels: tuple[int, ...]
    logprob: float
    score: float  # logprob / length_penalty(len(labels), alpha)
    state: Any = field(repr=False, default=None)


def beam_search(model, window, config: BeamConfig) -> list[Hypothesis]:
    """Top-`width` complete label sequences, best first.

    At every step each live hypothesis is expanded over all labels and the
    best `width` by normalized score survive. Score ties resolve to the
    lexicographically smaller label sequence, so results are deterministic.
    """
    session = model.decode_session(window)
    beams = [Hypothesis(labels=(), logprob=0.0, score=0.0, state=session.start_state)]
    for k in range(session.length):
        lp = length_penalty(k + 1, config.alpha)
        candidates: list[Hypothesis] = []
        for hyp in beams:
            prev = hyp.labels[-1] if hyp.labels else None
            logprobs, state = session.step(hyp.state, prev)
            for y in range(session.n_labels):
                total = hyp.logprob + float(logprobs[y])
                candidates.append(
                    Hypothesis(hyp.labels + (y,), total, total / lp, state)
                )
        candidates.sort(key=lambda h: (-h.score, h.labels))
        beams = candidates[: config.width]
    return beams


def greedy_decode(model, window) -> list[int]:
    """Pick the argmax label at every step (ties to the lowest index);
    identical to beam search with width 1."""
    session = model.decode_session(window)
    state = session.start_state
    prev: int | None = None
    out: list[int] = []
    for _ in range(session.length):
        logprobs, state = session.step(state, prev)
        prev = int(logprobs.argmax())
        out.append(prev)
    return out


def exhaustive_decode(model, window, alpha: float = 0.65, cap: int = 10**6) -> Hypothesis:
    """Exact argmax over all label sequences (test oracle).

    Walks the full tree of prefixes so each prefix's decoder step runs once.
    Ties resolve to the lexicographically smallest sequence, matching beam
    search.
    """
    session = model.decode_session(window)
    n_sequences = session.n_labels**session.length
    if n_sequences > cap:
        raise ValueError(f"exhaustive decode over {n_sequences} sequences exceeds cap {cap}")

    lp_final = length_penalty(session.length, alpha)
    best: Hypothesis | None = None

    def descend(labels: tuple[int, ...], logprob: float, state) -> None:
        nonlocal best
        prev = labels[-1] if labels else None
        logprobs, next_state = session.step(state, prev)
        for y in range(session.n_labels):
            seq = labels + (y,)
            total = logprob + float(logprobs[y])
            if len(seq) == session.length:
                score = total / lp_final
                if best is None or score > best.score or (score == best.score and seq < best.labels):
                    best = Hypothesis(seq, total, score, None)
            else:
                descend(seq, total, next_state)

    descend((), 0.0, session.start_state)
    assert best is not None
    return best
