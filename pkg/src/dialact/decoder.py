"""Label-sequence decoder: a GRU conditioned on the encoder summary, with
four attention modes over encoder states.

Because windows align one label to one utterance, decode step k can be told
where to look: ``hard`` attention pins the whole weight on position k,
``soft`` adds +1 to position k's logit before the softmax, ``additive`` is
the unconstrained feedforward-scored baseline, and ``none`` skips context
vectors entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Node,
    ParamStore,
    concat,
    dropout,
    log_softmax,
    matmul,
    no_grad,
    one_hot,
    pick,
    row,
    softmax,
    stack,
    tanh,
)
from .encoder import EncoderOutput, gru_cell, init_gru_params, uniform_init

__all__ = [
    "ATTENTION_MODES",
    "AttentionParams",
    "Decoder",
    "attention_weights",
    "context_vector",
]

ATTENTION_MODES = ("none", "additive", "hard", "soft")


@dataclass
class AttentionParams:
    """Single-tanh-layer feedforward scorer a(d, h) = v . tanh(W1 d + W2 h).

    Stored so that scores over all encoder positions come out of two matmuls:
    w1 is (att_dim, dec_hidden), w2 is (state_dim, att_dim), v is (att_dim,).
    """

    w1: Node
    w2: Node
    v: Node


def attention_scores(att: AttentionParams, dec_state: Node, enc_matrix: Node) -> Node:
    """a(dec_state, h_j) for every encoder position j; returns a vector."""
    pre = matmul(enc_matrix, att.w2) + matmul(att.w1, dec_state)
    return matmul(tanh(pre), att.v)


def attention_weights(
    mode: str,
    dec_state: Node,
    enc_matrix: Node,
    k: int,
    att: AttentionParams | None = None,
) -> Node:
    """Weights over encoder positions for decode step k (sum to 1)."""
    n_positions = enc_matrix.value.shape[0]
    if not 0 <= k < n_positions:
        raise ValueError(f"decode step {k} outside window of length {n_positions}")
    if mode == "hard":
        return one_hot(k, n_positions)
    if mode == "additive":
        return softmax(attention_scores(att, dec_state, enc_matrix))
    if mode == "soft":
        scores = attention_scores(att, dec_state, enc_matrix)
        return softmax(scores + one_hot(k, n_positions))
    if mode == "none":
        raise ValueError("attention mode 'none' has no attention row; skip the context vector")
    raise ValueError(f"unknown attention mode {mode!r}; choose from {ATTENTION_MODES}")


def context_vector(weights: Node, enc_matrix: Node) -> Node:
    """Weighted sum of encoder states: weights (L,) x states (L, d) -> (d,)."""
    return matmul(weights, enc_matrix)


class Decoder:
    """GRU decoder over label embeddings, one output distribution per
    utterance position."""

    def __init__(
        self,
        store: ParamStore,
        n_labels: int,
        state_dim: int,
        hidden: int,
        label_emb_dim: int,
        attention_mode: str,
        attention_dim: int,
        rng: np.random.Generator,
    ):
        if attention_mode not in ATTENTION_MODES:
            raise ValueError(
                f"unknown attention mode {attention_mode!r}; choose from {ATTENTION_MODES}"
            )
        self.n_labels = n_labels
        self.hidden = hidden
        self.mode = attention_mode
        self.sos_index = n_labels  # extra row of the label embedding table

        # Start-symbol row included; uniform init like the word embeddings.
        self.label_emb = store.add(
            "dec.label_emb", rng.uniform(-0.1, 0.1, size=(n_labels + 1, label_emb_dim))
        )

        input_dim = label_emb_dim + (state_dim if attention_mode != "none" else 0)
        self.cell = init_gru_params(store, "dec.cell", input_dim, hidden, rng)
        self.out_w = store.add("dec.out_w", uniform_init(rng, (n_labels, hidden), hidden))
        self.out_b = store.add("dec.out_b", np.zeros(n_labels))

        if state_dim != hidden:
            self.bridge_w = store.add("dec.bridge_w", uniform_init(rng, (hidden, state_dim), state_dim))
            self.bridge_b = store.add("dec.bridge_b", np.zeros(hidden))
        else:
            self.bridge_w = None
            self.bridge_b = None

        if attention_mode in ("additive", "soft"):
            self.att = AttentionParams(
                w1=store.add("dec.att_w1", uniform_init(rng, (attention_dim, hidden), hidden)),
                w2=store.add("dec.att_w2", uniform_init(rng, (state_dim, attention_dim), state_dim)),
                v=store.add("dec.att_v", uniform_init(rng, (attention_dim,), attention_dim)),
            )
        else:
            self.att = None

    def initial_state(self, enc: EncoderOutput) -> Node:
        """Linear bridge from the encoder summary when sizes differ."""
        if self.bridge_w is None:
            return enc.summary
        return self.bridge_w @ enc.summary + self.bridge_b

    def step(
        self,
        prev_label: int | None,
        state: Node,
        enc_states: list[Node],
        enc_matrix: Node | None,
        k: int,
        train: bool = False,
        dropout_rate: float = 0.0,
        rng: np.random.Generator | None = None,
    ) -> tuple[Node, Node, Node | None]:
        """One decode step.

        Returns (log-probabilities over labels, next state, attention row).
        ``prev_label=None`` means the start symbol. The attention row is None
        in mode 'none'.
        """
        index = self.sos_index if prev_label is None else int(prev_label)
        if not 0 <= index <= self.sos_index:
            raise ValueError(f"label index {index} out of range (0..{self.sos_index})")
        emb = row(self.label_emb, index)

        att_row: Node | None = None
        if self.mode == "hard":
            # One-hot context: exactly the encoder state at this position.
            if not 0 <= k < len(enc_states):
                raise ValueError(f"decode step {k} outside window of length {len(enc_states)}")
            x = concat((emb, enc_states[k]))
        elif self.mode in ("additive", "soft"):
            att_row = attention_weights(self.mode, state, enc_matrix, k, self.att)
            x = concat((emb, context_vector(att_row, enc_matrix)))
        else:
            x = emb

        h = gru_cell(x, state, self.cell)
        out_in = h
        if train and dropout_rate > 0.0:
            assert rng is not None, "training-mode dropout needs an rng"
            out_in = dropout(h, dropout_rate, rng)
        logprobs = log_softmax(self.out_w @ out_in + self.out_b)
        return logprobs, h, att_row

    def needs_matrix(self) -> bool:
        return self.mode in ("additive", "soft")


def sequence_logprob(
    decoder: Decoder,
    enc: EncoderOutput,
    labels: tuple[int, ...] | list[int],
    train: bool = False,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Node:
    """log p(labels | window) with the given labels also used as the
    conditioning prefix (teacher forcing)."""
    if len(labels) != len(enc.states):
        raise ValueError(f"got {len(labels)} labels for a window of length {len(enc.states)}")
    enc_matrix = stack(enc.states) if decoder.needs_matrix() else None
    state = decoder.initial_state(enc)
    total: Node | None = None
    prev: int | None = None
    for k, gold in enumerate(labels):
        logprobs, state, _ = decoder.step(
            prev, state, enc.states, enc_matrix, k, train, dropout_rate, rng
        )
        term = pick(logprobs, int(gold))
        total = term if total is None else total + term
        prev = int(gold)
    return total


def attention_matrix(
    decoder: Decoder,
    enc: EncoderOutput,
    conditioning: list[int],
) -> np.ndarray:
    """Attention rows over a full window under the given conditioning labels
    (one row per decode step). Raises for mode 'none'."""
    if decoder.mode == "none":
        raise ValueError("attention mode 'none' has no attention matrix")
    length = len(enc.states)
    out = np.zeros((length, length))
    with no_grad():
        enc_matrix = stack(enc.states)
        state = decoder.initial_state(enc)
        prev: int | None = None
        for k in range(length):
            _, state, att_row = decoder.step(prev, state, enc.states, enc_matrix, k)
            if decoder.mode == "hard":
                out[k, k] = 1.0
            else:
                out[k] = att_row.value
            prev = conditioning[k]
    return out
