"""Conversation corpus handling: parsing, vocabularies, context windows,
word-vector loading.

Corpus file format (UTF-8, one utterance per line):

    conversation_id <TAB> speaker <TAB> label <TAB> utterance text

Lines of one conversation are contiguous; blank lines are ignored. Text is
lowercased and split on whitespace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

__all__ = [
    "Conversation",
    "EmbeddingMatrix",
    "EncodedWindow",
    "ParseError",
    "Utterance",
    "Vocabulary",
    "Window",
    "build_vocab",
    "encode_window",
    "load_word_vectors",
    "parse_corpus",
    "serialize_corpus",
    "window_conversation",
    "windows_for_corpus",
]

PAD_INDEX = 0
UNK_INDEX = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Utterance:
    speaker: str
    tokens: tuple[str, ...]
    label: str


@dataclass(frozen=True)
class Conversation:
    id: str
    utterances: tuple[Utterance, ...]


@dataclass(frozen=True)
class Window:
    """Up to `context_size` consecutive utterances; the model labels all of
    them and evaluation scores the last one."""

    conversation_id: str
    utterances: tuple[Utterance, ...]
    gold_labels: tuple[str, ...]
    last_index: int  # position of the last utterance within its conversation


@dataclass(frozen=True)
class EncodedWindow:
    """Index form of a window: token ids per utterance, label ids, speakers."""

    conversation_id: str
    token_ids: tuple[np.ndarray, ...]
    label_ids: tuple[int, ...]
    speakers: tuple[str, ...]
    last_index: int

    def __len__(self) -> int:
        return len(self.token_ids)


def parse_corpus(stream: Iterable[str]) -> list[Conversation]:
    """Parse conversations from the tab-separated line format.

    Each contiguous run of lines sharing a conversation id becomes one
    Conversation, in file order.
    """
    conversations: list[Conversation] = []
    current_id: str | None = None
    current: list[Utterance] = []

    def flush() -> None:
        if current_id is not None:
            conversations.append(Conversation(current_id, tuple(current)))

    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"line {lineno}: expected 4 tab-separated fields, got {len(fields)}")
        conv_id, speaker, label, text = fields
        tokens = text.lower().split()
        if not tokens:
            raise ParseError(f"line {lineno}: empty utterance text")
        if not label:
            raise ParseError(f"line {lineno}: empty label")
        if conv_id != current_id:
            flush()
            current_id = conv_id
            current = []
        current.append(Utterance(speaker, tuple(tokens), label))
    flush()
    return conversations


def serialize_corpus(conversations: Sequence[Conversation]) -> str:
    """Inverse of parse_corpus for already-lowercased corpora."""
    lines = []
    for conv in conversations:
        for utt in conv.utterances:
            lines.append(f"{conv.id}\t{utt.speaker}\t{utt.label}\t{' '.join(utt.tokens)}")
    return "\n".join(lines) + "\n"


@dataclass
class Vocabulary:
    """Word and label index maps. Word index 0 is PAD, 1 is UNK; labels get
    dense indices 0..n-1 with a start-symbol index n used only by decoders."""

    word_to_index: dict[str, int]
    label_to_index: dict[str, int]
    min_frequency: int

    @property
    def n_words(self) -> int:
        return len(self.word_to_index)

    @property
    def n_labels(self) -> int:
        return len(self.label_to_index)

    @property
    def sos_index(self) -> int:
        return len(self.label_to_index)

    def word_index(self, word: str) -> int:
        return self.word_to_index.get(word, UNK_INDEX)

    def label_index(self, label: str) -> int:
        try:
            return self.label_to_index[label]
        except KeyError:
            raise ValueError(f"unknown label {label!r}; the label inventory is closed") from None

    def labels(self) -> list[str]:
        """Label strings ordered by index."""
        out = [""] * len(self.label_to_index)
        for label, i in self.label_to_index.items():
            out[i] = label
        return out

    def save(self, fp: IO[str]) -> None:
        fp.write("dialact-vocab 1\n")
        fp.write(f"min_frequency\t{self.min_frequency}\n")
        for word, i in sorted(self.word_to_index.items(), key=lambda kv: kv[1]):
            fp.write(f"w\t{word}\t{i}\n")
        for label, i in sorted(self.label_to_index.items(), key=lambda kv: kv[1]):
            fp.write(f"l\t{label}\t{i}\n")

    @classmethod
    def load(cls, fp: IO[str]) -> "Vocabulary":
        header = fp.readline().strip()
        if header != "dialact-vocab 1":
            raise ValueError(f"unrecognized vocabulary header {header!r}")
        min_freq_line = fp.readline().strip().split("\t")
        min_frequency = int(min_freq_line[1])
        words: dict[str, int] = {}
        labels: dict[str, int] = {}
        for line in fp:
            line = line.rstrip("\n")
            if not line:
                continue
            kind, key, idx = line.split("\t")
            if kind == "w":
                words[key] = int(idx)
            elif kind == "l":
                labels[key] = int(idx)
            else:
                raise ValueError(f"unrecognized vocabulary row kind {kind!r}")
        return cls(words, labels, min_frequency)


def build_vocab(conversations: Sequence[Conversation], min_frequency: int = 1) -> Vocabulary:
    """Index words with corpus frequency >= min_frequency plus all labels."""
    if min_frequency < 1:
        raise ValueError(f"min_frequency must be >= 1, got {min_frequency}")
    if not conversations:
        raise ValueError("cannot build a vocabulary from an empty corpus")

    counts: dict[str, int] = {}
    label_set: set[str] = set()
    for conv in conversations:
        for utt in conv.utterances:
            label_set.add(utt.label)
            for tok in utt.tokens:
                counts[tok] = counts.get(tok, 0) + 1

    word_to_index = {PAD_TOKEN: PAD_INDEX, UNK_TOKEN: UNK_INDEX}
    kept = sorted(
        (w for w, c in counts.items() if c >= min_frequency),
        key=lambda w: (-counts[w], w),
    )
    for word in kept:
        word_to_index[word] = len(word_to_index)

    label_to_index = {label: i for i, label in enumerate(sorted(label_set))}
    return Vocabulary(word_to_index, label_to_index, min_frequency)


def window_conversation(conversation: Conversation, context_size: int) -> list[Window]:
    """Stride-1 sliding windows: one window ending at every utterance, with a
    truncated prefix near the start of the conversation."""
    if context_size < 1:
        raise ValueError(f"context_size must be >= 1, got {context_size}")
    windows = []
    utts = conversation.utterances
    for i in range(len(utts)):
        chunk = utts[max(0, i - context_size + 1) : i + 1]
        windows.append(
            Window(
                conversation_id=conversation.id,
                utterances=chunk,
                gold_labels=tuple(u.label for u in chunk),
                last_index=i,
            )
        )
    return windows


def windows_for_corpus(conversations: Sequence[Conversation], context_size: int) -> list[Window]:
    out: list[Window] = []
    for conv in conversations:
        out.extend(window_conversation(conv, context_size))
    return out


def encode_window(window: Window, vocab: Vocabulary, max_tokens: int) -> EncodedWindow:
    """Map a window to index form; utterances are truncated to max_tokens
    (keeping the leading tokens) and unknown words map to UNK."""
    if max_tokens < 1:
        raise ValueError(f"max_tokens must be >= 1, got {max_tokens}")
    token_ids = tuple(
        np.array([vocab.word_index(t) for t in utt.tokens[:max_tokens]], dtype=np.intp)
        for utt in window.utterances
    )
    label_ids = tuple(vocab.label_index(lab) for lab in window.gold_labels)
    speakers = tuple(u.speaker for u in window.utterances)
    return EncodedWindow(window.conversation_id, token_ids, label_ids, speakers, window.last_index)


@dataclass
class EmbeddingMatrix:
    """One d_emb vector per vocabulary word, by word index."""

    vectors: np.ndarray
    trainable: bool = True


def load_word_vectors(
    stream: Iterable[str],
    vocab: Vocabulary,
    d_emb: int,
    seed: int = 0,
) -> EmbeddingMatrix:
    """Read `word v1 .. v_d` lines; vocabulary words absent from the stream
    get uniform[-0.1, 0.1] rows from the seeded generator."""
    rng = np.random.default_rng(seed)
    vectors = rng.uniform(-0.1, 0.1, size=(vocab.n_words, d_emb))
    for raw in stream:
        parts = raw.split()
        if not parts:
            continue
        word, values = parts[0], parts[1:]
        if len(values) != d_emb:
            raise ValueError(
                f"word vector for {word!r} has {len(values)} dimensions, expected {d_emb}"
            )
        idx = vocab.word_to_index.get(word)
        if idx is not None:
            row = np.array([float(v) for v in values], dtype=np.float64)
            if not np.isfinite(row).all():
                raise ValueError(f"word vector for {word!r} has non-finite entries")
            vectors[idx] = row
    return EmbeddingMatrix(vectors=vectors, trainable=True)
