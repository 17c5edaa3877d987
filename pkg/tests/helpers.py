"""Shared test fixtures: brute-force oracles and tiny model builders.

The oracles here are deliberately independent of the library's dynamic
programs: they enumerate label paths outright.
"""

from __future__ import annotations

import itertools

import numpy as np

import dialact as D
from dialact.corpus import build_vocab, encode_window, windows_for_corpus
from dialact.synthetic import make_synthetic_corpus


def enumerate_crf_paths(unary: np.ndarray, trans: np.ndarray, start: np.ndarray | None = None):
    """Score every label path of a linear chain by direct summation.

    Returns (scores dict path->score, log partition, best path).
    """
    length, n_labels = unary.shape
    scores: dict[tuple[int, ...], float] = {}
    for path in itertools.product(range(n_labels), repeat=length):
        s = unary[0, path[0]]
        if start is not None:
            s += start[path[0]]
        for t in range(1, length):
            s += unary[t, path[t]] + trans[path[t - 1], path[t]]
        scores[path] = float(s)
    values = np.array(list(scores.values()))
    m = values.max()
    log_z = float(m + np.log(np.exp(values - m).sum()))
    best = min((p for p, s in scores.items() if s == values.max()))
    return scores, log_z, best


class TableModel:
    """Decode-session mock whose step distribution depends on the whole
    prefix (keyed by a seeded lookup), so search bookkeeping is exercised
    beyond Markov structure."""

    def __init__(self, n_labels: int, length: int, seed: int, sharpness: float = 1.0):
        self.n_labels = n_labels
        self.length = length
        self._seed = seed
        self._sharpness = sharpness
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    def decode_session(self, window=None):
        return _TableSession(self)

    def logprobs_for(self, prefix: tuple[int, ...]) -> np.ndarray:
        got = self._cache.get(prefix)
        if got is None:
            rng = np.random.default_rng((self._seed, 1 + len(prefix), *prefix))
            logits = self._sharpness * rng.normal(size=self.n_labels)
            got = logits - np.log(np.exp(logits - logits.max()).sum()) - logits.max()
            self._cache[prefix] = got
        return got


class _TableSession:
    def __init__(self, model: TableModel):
        self.n_labels = model.n_labels
        self.length = model.length
        self.start_state = ()
        self._model = model

    def step(self, state, prev_label):
        prefix = state if prev_label is None else state + (prev_label,)
        return self._model.logprobs_for(prefix), prefix


def tiny_setup(
    seed: int = 0,
    encoder: str = "hierarchical",
    attention: str = "hard",
    model: str = "seq2seq",
    window_length: int = 5,
    n_conversations: int = 4,
):
    """A vocabulary, one encoded window of the requested length, and a small
    tagger with random weights."""
    convs = make_synthetic_corpus("local", n_conversations, seed=seed)
    vocab = build_vocab(convs)
    windows = [
        w
        for w in windows_for_corpus(convs, window_length)
        if len(w.utterances) == window_length
    ]
    window = encode_window(windows[0], vocab, 20)
    cfg = D.TrainConfig(
        model=model,
        encoder=encoder,
        attention=attention,
        emb_dim=5,
        word_hidden=4,
        persona_hidden=4,
        sentence_hidden=4,
        decoder_hidden=6,
        label_emb_dim=3,
        attention_dim=3,
        dropout=0.0,
        weight_decay=0.0,
    )
    tagger = D.build_model(vocab, cfg, np.random.default_rng(seed + 100))
    return vocab, window, tagger, cfg
