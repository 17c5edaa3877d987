"""Context encoders for utterance windows.

Three kinds, all ending in a sentence-level bidirectional GRU over utterance
embeddings:

* ``mean``         - utterance embedding is the mean of its word vectors
                     (sentence bi-GRU uses two stacked layers)
* ``hierarchical`` - utterance embedding from a word-level bi-GRU
* ``speaker``      - hierarchical plus a speaker-aware bi-GRU layer whose
                     state resets at speaker changes

The per-window output is one state per utterance (forward and backward
halves concatenated) plus the summary vector taken at the last position,
which seeds the decoder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Node,
    ParamStore,
    concat,
    dropout,
    mean_over_rows,
    row,
    rows,
    sigmoid,
    tanh,
    zeros,
)

__all__ = [
    "ENCODER_KINDS",
    "ContextEncoder",
    "EncoderConfig",
    "EncoderOutput",
    "GRUParams",
    "bi_gru",
    "embed_utterance_mean",
    "encode_utterance_bigru",
    "gru_cell",
    "init_gru_params",
    "persona_layer",
]

ENCODER_KINDS = ("mean", "hierarchical", "speaker")


@dataclass
class GRUParams:
    """Per-gate input/recurrent weights and biases of one GRU direction."""

    w_r: Node
    u_r: Node
    b_r: Node
    w_z: Node
    u_z: Node
    b_z: Node
    w_n: Node
    u_n: Node
    b_n: Node
    hidden: int


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_gru_params(
    store: ParamStore,
    prefix: str,
    input_dim: int,
    hidden: int,
    rng: np.random.Generator,
) -> GRUParams:
    """Uniform[-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero biases."""

    def w(name: str) -> Node:
        return store.add(f"{prefix}.{name}", uniform_init(rng, (hidden, input_dim), input_dim))

    def u(name: str) -> Node:
        return store.add(f"{prefix}.{name}", uniform_init(rng, (hidden, hidden), hidden))

    def b(name: str) -> Node:
        return store.add(f"{prefix}.{name}", np.zeros(hidden))

    return GRUParams(
        w_r=w("w_r"), u_r=u("u_r"), b_r=b("b_r"),
        w_z=w("w_z"), u_z=u("u_z"), b_z=b("b_z"),
        w_n=w("w_n"), u_n=u("u_n"), b_n=b("b_n"),
        hidden=hidden,
    )


def gru_cell(x: Node, h: Node, p: GRUParams) -> Node:
    """One GRU step: h' = z*h + (1-z)*n with reset gate r on the candidate."""
    r = sigmoid(p.w_r @ x + p.u_r @ h + p.b_r)
    z = sigmoid(p.w_z @ x + p.u_z @ h + p.b_z)
    n = tanh(p.w_n @ x + p.u_n @ (r * h) + p.b_n)
    # z*h + (1-z)*n, written with one fewer node
    return n + z * (h - n)


def bi_gru(
    inputs: list[Node],
    fwd: GRUParams,
    bwd: GRUParams,
) -> tuple[list[Node], Node, Node]:
    """Run both directions from zero states.

    Returns (per-step states, final forward state, final backward state),
    where per-step state t is [forward_t, backward_t] and the final backward
    state is the one produced at the first position (the backward direction's
    last step).
    """
    if not inputs:
        raise ValueError("bi_gru: empty input sequence")
    n = len(inputs)

    h = zeros(fwd.hidden)
    fwd_states: list[Node] = []
    for x in inputs:
        h = gru_cell(x, h, fwd)
        fwd_states.append(h)

    h = zeros(bwd.hidden)
    bwd_states: list[Node] = [None] * n  # type: ignore[list-item]
    for t in range(n - 1, -1, -1):
        h = gru_cell(inputs[t], h, bwd)
        bwd_states[t] = h

    states = [concat((f, b)) for f, b in zip(fwd_states, bwd_states)]
    return states, fwd_states[-1], bwd_states[0]


def embed_utterance_mean(token_matrix: Node) -> Node:
    """Mean of the word-embedding rows of one utterance."""
    if token_matrix.value.shape[0] < 1:
        raise ValueError("cannot embed an empty utterance")
    return mean_over_rows(token_matrix)


def encode_utterance_bigru(
    token_vectors: list[Node],
    fwd: GRUParams,
    bwd: GRUParams,
) -> Node:
    """Word-level bi-GRU utterance embedding: both directions' final states,
    concatenated. States start at zero for every utterance."""
    if not token_vectors:
        raise ValueError("cannot encode an empty utterance")
    _, final_fwd, final_bwd = bi_gru(token_vectors, fwd, bwd)
    return concat((final_fwd, final_bwd))


def persona_layer(
    utterance_embeddings: list[Node],
    speakers: tuple[str, ...] | list[str],
    fwd: GRUParams,
    bwd: GRUParams,
) -> list[Node]:
    """Bi-GRU over utterance embeddings with speaker-boundary resets.

    The forward state entering position t resets to zero when speaker(t) !=
    speaker(t-1); the backward state resets when speaker(t) != speaker(t+1).
    """
    n = len(utterance_embeddings)
    if n != len(speakers):
        raise ValueError(f"got {n} utterance embeddings but {len(speakers)} speakers")

    h = zeros(fwd.hidden)
    fwd_states: list[Node] = []
    for t in range(n):
        if t > 0 and speakers[t] != speakers[t - 1]:
            h = zeros(fwd.hidden)
        h = gru_cell(utterance_embeddings[t], h, fwd)
        fwd_states.append(h)

    h = zeros(bwd.hidden)
    bwd_states: list[Node] = [None] * n  # type: ignore[list-item]
    for t in range(n - 1, -1, -1):
        if t < n - 1 and speakers[t] != speakers[t + 1]:
            h = zeros(bwd.hidden)
        h = gru_cell(utterance_embeddings[t], h, bwd)
        bwd_states[t] = h

    return [concat((f, b)) for f, b in zip(fwd_states, bwd_states)]


@dataclass
class EncoderConfig:
    kind: str = "hierarchical"
    emb_dim: int = 300
    word_hidden: int = 64
    persona_hidden: int = 64
    sentence_hidden: int = 128

    def __post_init__(self) -> None:
        if self.kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder kind {self.kind!r}; choose from {ENCODER_KINDS}")

    @property
    def sentence_layers(self) -> int:
        # The mean-pooled encoder stacks two sentence-level bi-GRU layers;
        # the hierarchical kinds use one.
        return 2 if self.kind == "mean" else 1

    @property
    def state_dim(self) -> int:
        return 2 * self.sentence_hidden


@dataclass
class EncoderOutput:
    """Per-utterance states and the last-position summary vector."""

    states: list[Node]
    summary: Node


class ContextEncoder:
    """Owns the encoder parameters for one model and runs windows through
    them. Token embedding lookup happens here so the utterance levels only
    see dense vectors."""

    def __init__(
        self,
        store: ParamStore,
        config: EncoderConfig,
        embedding: Node,
        rng: np.random.Generator,
    ):
        self.config = config
        self.embedding = embedding

        if config.kind in ("hierarchical", "speaker"):
            self.word_fwd = init_gru_params(store, "enc.word.fwd", config.emb_dim, config.word_hidden, rng)
            self.word_bwd = init_gru_params(store, "enc.word.bwd", config.emb_dim, config.word_hidden, rng)
            utt_dim = 2 * config.word_hidden
        else:
            utt_dim = config.emb_dim

        if config.kind == "speaker":
            self.persona_fwd = init_gru_params(store, "enc.persona.fwd", utt_dim, config.persona_hidden, rng)
            self.persona_bwd = init_gru_params(store, "enc.persona.bwd", utt_dim, config.persona_hidden, rng)
            utt_dim = 2 * config.persona_hidden

        self.sentence_layers: list[tuple[GRUParams, GRUParams]] = []
        in_dim = utt_dim
        for layer in range(config.sentence_layers):
            f = init_gru_params(store, f"enc.sent{layer}.fwd", in_dim, config.sentence_hidden, rng)
            b = init_gru_params(store, f"enc.sent{layer}.bwd", in_dim, config.sentence_hidden, rng)
            self.sentence_layers.append((f, b))
            in_dim = 2 * config.sentence_hidden

    def utterance_embeddings(self, token_ids: tuple[np.ndarray, ...]) -> list[Node]:
        embs = []
        for ids in token_ids:
            if len(ids) == 0:
                raise ValueError("cannot encode an empty utterance")
            mat = rows(self.embedding, ids)
            if self.config.kind == "mean":
                embs.append(mean_over_rows(mat))
            else:
                vecs = [row(mat, j) for j in range(len(ids))]
                embs.append(encode_utterance_bigru(vecs, self.word_fwd, self.word_bwd))
        return embs

    def __call__(
        self,
        token_ids: tuple[np.ndarray, ...],
        speakers: tuple[str, ...],
        train: bool = False,
        dropout_rate: float = 0.0,
        rng: np.random.Generator | None = None,
    ) -> EncoderOutput:
        if not 1 <= len(token_ids):
            raise ValueError("cannot encode an empty window")
        embs = self.utterance_embeddings(token_ids)
        if train and dropout_rate > 0.0:
            assert rng is not None, "training-mode dropout needs an rng"
            embs = [dropout(e, dropout_rate, rng) for e in embs]
        if self.config.kind == "speaker":
            embs = persona_layer(embs, speakers, self.persona_fwd, self.persona_bwd)
        states = embs
        for f, b in self.sentence_layers:
            states, _, _ = bi_gru(states, f, b)
        # Summary = the state at the final position, both directions.
        return EncoderOutput(states=states, summary=states[-1])
