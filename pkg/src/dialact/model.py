"""Model assembly: the seq2seq tagger, the CRF tagger, and checkpoint I/O.

Both taggers share the encoder stack and expose ``predict_labels`` so the
evaluation loop does not care which family it is scoring.

Checkpoint format (versioned, documented here and in the README): a UTF-8
text file whose first line is ``dialact-checkpoint 1`` followed by one line
per parameter::

    <name> <TAB> <d0[,d1]> <TAB> <row-major values, space-separated>

Values are written with %.17g, which round-trips float64 exactly.
"""

from __future__ import annotations

from typing import IO

import numpy as np

from .autodiff import Node, ParamStore, no_grad, scale, stack
from .config import TrainConfig
from .corpus import EncodedWindow, Vocabulary
from .crf import crf_nll, viterbi_decode
from .decoder import Decoder, attention_matrix, sequence_logprob
from .encoder import ContextEncoder, EncoderConfig
from .search import BeamConfig, beam_search, greedy_decode
from .optim import adam_step, adamw_step

__all__ = [
    "CRFTagger",
    "Seq2SeqTagger",
    "build_model",
    "load_checkpoint",
    "save_checkpoint",
]

CHECKPOINT_HEADER = "dialact-checkpoint 1"


def _encoder_config(cfg: TrainConfig) -> EncoderConfig:
    return EncoderConfig(
        kind=cfg.encoder,
        emb_dim=cfg.emb_dim,
        word_hidden=cfg.word_hidden,
        persona_hidden=cfg.persona_hidden,
        sentence_hidden=cfg.sentence_hidden,
    )


class Seq2SeqTagger:
    """Encoder + label-sequence decoder trained by token-level NLL and
    optionally fine-tuned with the expected-cost loss over beam candidates."""

    def __init__(
        self,
        vocab: Vocabulary,
        cfg: TrainConfig,
        rng: np.random.Generator,
        embedding: np.ndarray | None = None,
    ):
        self.vocab = vocab
        self.cfg = cfg
        self.store = ParamStore()
        if embedding is None:
            embedding = rng.uniform(-0.1, 0.1, size=(vocab.n_words, cfg.emb_dim))
        if embedding.shape != (vocab.n_words, cfg.emb_dim):
            raise ValueError(
                f"embedding shape {embedding.shape} != ({vocab.n_words}, {cfg.emb_dim})"
            )
        self.embedding = self.store.add("embedding", embedding)
        enc_cfg = _encoder_config(cfg)
        self.encoder = ContextEncoder(self.store, enc_cfg, self.embedding, rng)
        self.decoder = Decoder(
            self.store,
            n_labels=vocab.n_labels,
            state_dim=enc_cfg.state_dim,
            hidden=cfg.decoder_hidden,
            label_emb_dim=cfg.label_emb_dim,
            attention_mode=cfg.attention,
            attention_dim=cfg.attention_dim,
            rng=rng,
        )

    @property
    def n_labels(self) -> int:
        return self.vocab.n_labels

    def encode(
        self,
        window: EncodedWindow,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ):
        return self.encoder(
            window.token_ids, window.speakers, train=train, dropout_rate=self.cfg.dropout, rng=rng
        )

    def sequence_logprob(
        self,
        window: EncodedWindow,
        labels: tuple[int, ...] | list[int],
        enc=None,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Node:
        """log p(labels | window), conditioning each step on the given labels."""
        if enc is None:
            enc = self.encode(window, train=train, rng=rng)
        return sequence_logprob(
            self.decoder, enc, labels, train=train, dropout_rate=self.cfg.dropout, rng=rng
        )

    def token_nll(
        self,
        window: EncodedWindow,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Node:
        """Teacher-forced cross entropy, averaged over window positions."""
        logprob = self.sequence_logprob(window, window.label_ids, train=train, rng=rng)
        return scale(logprob, -1.0 / len(window.label_ids))

    def decode_session(self, window: EncodedWindow) -> "_SeqSession":
        return _SeqSession(self, window)

    def predict_labels(
        self, window: EncodedWindow, beam: BeamConfig | None = None
    ) -> tuple[list[int], float]:
        """Best label sequence and its normalized score."""
        beam = beam or BeamConfig(width=self.cfg.beam_infer, alpha=self.cfg.length_alpha)
        top = beam_search(self, window, beam)[0]
        return list(top.labels), top.score

    def attention_rows(self, window: EncodedWindow) -> np.ndarray:
        """Attention matrix for one window under greedy conditioning."""
        conditioning = greedy_decode(self, window)
        with no_grad():
            enc = self.encode(window)
            return attention_matrix(self.decoder, enc, conditioning)


class _SeqSession:
    """Frozen-parameter decoding interface for one window. State is a
    (step index, decoder hidden) pair so attention knows its position."""

    def __init__(self, model: Seq2SeqTagger, window: EncodedWindow):
        self._model = model
        with no_grad():
            self._enc = model.encode(window)
            self._matrix = stack(self._enc.states) if model.decoder.needs_matrix() else None
            h0 = model.decoder.initial_state(self._enc)
        self.length = len(self._enc.states)
        self.n_labels = model.n_labels
        self.start_state = (0, h0)

    def step(self, state, prev_label: int | None):
        k, h = state
        with no_grad():
            logprobs, h_next, _ = self._model.decoder.step(
                prev_label, h, self._enc.states, self._matrix, k
            )
        return logprobs.value, (k + 1, h_next)


class CRFTagger:
    """Encoder + linear-chain CRF head (unary projection, transition table
    and start scores)."""

    def __init__(
        self,
        vocab: Vocabulary,
        cfg: TrainConfig,
        rng: np.random.Generator,
        embedding: np.ndarray | None = None,
    ):
        self.vocab = vocab
        self.cfg = cfg
        self.store = ParamStore()
        if embedding is None:
            embedding = rng.uniform(-0.1, 0.1, size=(vocab.n_words, cfg.emb_dim))
        self.embedding = self.store.add("embedding", embedding)
        enc_cfg = _encoder_config(cfg)
        self.encoder = ContextEncoder(self.store, enc_cfg, self.embedding, rng)

        n = vocab.n_labels
        bound = 1.0 / np.sqrt(enc_cfg.state_dim)
        self.unary_w = self.store.add(
            "crf.unary_w", rng.uniform(-bound, bound, size=(n, enc_cfg.state_dim))
        )
        self.unary_b = self.store.add("crf.unary_b", np.zeros(n))
        self.transitions = self.store.add("crf.transitions", np.zeros((n, n)))
        self.start = self.store.add("crf.start", np.zeros(n))

    @property
    def n_labels(self) -> int:
        return self.vocab.n_labels

    def unary_nodes(
        self,
        window: EncodedWindow,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> list[Node]:
        enc = self.encoder(
            window.token_ids, window.speakers, train=train, dropout_rate=self.cfg.dropout, rng=rng
        )
        return [self.unary_w @ s + self.unary_b for s in enc.states]

    def nll(
        self,
        window: EncodedWindow,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Node:
        unaries = self.unary_nodes(window, train=train, rng=rng)
        return crf_nll(unaries, self.transitions, window.label_ids, self.start)

    def token_nll(self, window: EncodedWindow, train: bool = False, rng=None) -> Node:
        """Same objective scaled per position, so training logs are
        comparable with the seq2seq loss."""
        return scale(self.nll(window, train=train, rng=rng), 1.0 / len(window.label_ids))

    def predict_labels(
        self, window: EncodedWindow, beam: BeamConfig | None = None
    ) -> tuple[list[int], float]:
        with no_grad():
            unaries = self.unary_nodes(window)
            unary = np.stack([u.value for u in unaries])
        path = viterbi_decode(unary, self.transitions.value, self.start.value)
        score = float(
            self.start.value[path[0]]
            + sum(unary[t, y] for t, y in enumerate(path))
            + sum(self.transitions.value[path[t - 1], path[t]] for t in range(1, len(path)))
        )
        return path, score


def build_model(
    vocab: Vocabulary,
    cfg: TrainConfig,
    rng: np.random.Generator,
    embedding: np.ndarray | None = None,
):
    if cfg.model == "crf":
        return CRFTagger(vocab, cfg, rng, embedding)
    return Seq2SeqTagger(vocab, cfg, rng, embedding)


def optimizer_step(model, grads, lr: float) -> None:
    """Apply the configured optimizer at the given learning rate."""
    if model.cfg.optimizer == "adamw":
        adamw_step(model.store, grads, lr=lr, weight_decay=model.cfg.weight_decay)
    else:
        adam_step(model.store, grads, lr=lr, weight_decay=model.cfg.weight_decay)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(store: ParamStore, fp: IO[str]) -> None:
    fp.write(CHECKPOINT_HEADER + "\n")
    for name, node in sorted(store.items()):
        v = node.value
        dims = ",".join(str(d) for d in v.shape)
        values = " ".join(f"{x:.17g}" for x in v.reshape(-1))
        fp.write(f"{name}\t{dims}\t{values}\n")


def load_checkpoint(fp: IO[str]) -> dict[str, np.ndarray]:
    header = fp.readline().strip()
    if header != CHECKPOINT_HEADER:
        raise ValueError(f"unrecognized checkpoint header {header!r}")
    out: dict[str, np.ndarray] = {}
    for line in fp:
        line = line.rstrip("\n")
        if not line:
            continue
        name, dims, values = line.split("\t")
        shape = tuple(int(d) for d in dims.split(",")) if dims else ()
        arr = np.array([float(x) for x in values.split()], dtype=np.float64)
        out[name] = arr.reshape(shape)
    return out
