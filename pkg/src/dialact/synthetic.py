"""Synthetic corpora with known labeling rules, for desk-scale experiments.

Two kinds:

* ``local``  - each utterance carries a keyword token; its label is a fixed
  function of that keyword and the previous label. Utterances at positions
  divisible by 3 are "fresh": their label depends on the keyword alone,
  which bounds every label's dependency chain to at most two steps back, so
  any context window of three or more utterances pins the last label.

* ``global`` - the label at position i is the keyword index of utterance
  i-2 (positions 0 and 1 use their own keyword). The intervening utterance
  is irrelevant, so adjacent-label statistics carry no signal and a correct
  model must move information across two positions.

Both rules are deterministic given the token content, so the Bayes accuracy
is 100% by construction; seeds only drive content sampling.
"""

from __future__ import annotations

import numpy as np

from .corpus import Conversation, Utterance

__all__ = ["make_synthetic_corpus"]

N_LABELS = 5
_FILLERS = ("well", "so", "right", "okay", "hmm", "yeah", "now", "then")


def _label(i: int) -> str:
    return f"tag{i}"


def _local_label(position: int, keyword: int, prev_label: int | None) -> int:
    if position % 3 == 0 or prev_label is None:
        return keyword
    return (keyword + prev_label) % N_LABELS


def _global_label(keywords: list[int], position: int) -> int:
    return keywords[position - 2] if position >= 2 else keywords[position]


def make_synthetic_corpus(
    kind: str,
    size: int,
    seed: int,
    min_utterances: int = 5,
    max_utterances: int = 8,
) -> list[Conversation]:
    """Generate `size` conversations under the named labeling rule."""
    if kind not in ("local", "global"):
        raise ValueError(f"unknown synthetic corpus kind {kind!r}; choose local or global")
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    rng = np.random.default_rng(seed)

    conversations = []
    for c in range(size):
        n = int(rng.integers(min_utterances, max_utterances + 1))
        keywords = [int(k) for k in rng.integers(0, N_LABELS, size=n)]
        speakers = []
        spk = "A"
        for _ in range(n):
            if rng.random() < 0.4:
                spk = "B" if spk == "A" else "A"
            speakers.append(spk)

        utterances = []
        prev: int | None = None
        for i in range(n):
            if kind == "local":
                marker = "fresh" if i % 3 == 0 else "follow"
                tokens = [marker, f"key{keywords[i]}"]
                label_ix = _local_label(i, keywords[i], prev)
                prev = label_ix
            else:
                tokens = [f"key{keywords[i]}"]
                label_ix = _global_label(keywords, i)
            if rng.random() < 0.5:
                tokens.append(str(rng.choice(_FILLERS)))
            utterances.append(Utterance(speakers[i], tuple(tokens), _label(label_ix)))
        conversations.append(Conversation(f"syn{c}", tuple(utterances)))
    return conversations
