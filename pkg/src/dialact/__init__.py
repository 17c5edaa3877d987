"""Dialogue-act sequence labeling at desk scale.

A small float64 autodiff core carries three context encoders (mean-pooled,
hierarchical, speaker-aware hierarchical), a label-sequence GRU decoder with
alignment-guided attention, beam-search decoding with length normalization,
expected-cost sequence-level fine-tuning, and a linear-chain CRF baseline.
Everything is verifiable against finite differences and brute-force oracles.
"""

from .autodiff import Node, ParamStore, backward, grad_check, no_grad
from .config import TrainConfig, load_config
from .corpus import (
    Conversation,
    EncodedWindow,
    Utterance,
    Vocabulary,
    Window,
    build_vocab,
    encode_window,
    load_word_vectors,
    parse_corpus,
    serialize_corpus,
    window_conversation,
    windows_for_corpus,
)
from .model import CRFTagger, Seq2SeqTagger, build_model, load_checkpoint, save_checkpoint
from .search import BeamConfig, Hypothesis, beam_search, exhaustive_decode, greedy_decode
from .synthetic import make_synthetic_corpus
from .training import EvalReport, evaluate, finetune_risk, risk_loss, train

__version__ = "0.1.0"
