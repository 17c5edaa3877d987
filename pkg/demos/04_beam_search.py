#!/usr/bin/env python3
"""Beam search with length normalization, against greedy decoding and an
exhaustive argmax over every label sequence."""

import numpy as np

import dialact as D
from dialact.corpus import build_vocab, encode_window, windows_for_corpus
from dialact.search import BeamConfig, beam_search, exhaustive_decode, greedy_decode, length_penalty
from dialact.synthetic import make_synthetic_corpus

print("length penalty lp(n) = (5+n)^a / 6^a:")
for alpha in (0.0, 0.65, 1.0):
    values = ", ".join(f"lp({n})={length_penalty(n, alpha):.4f}" for n in (1, 3, 5))
    print(f"  alpha={alpha:4.2f}: {values}")

convs = make_synthetic_corpus("local", 6, seed=12)
vocab = build_vocab(convs)
windows = [encode_window(w, vocab, 20) for w in windows_for_corpus(convs, 4)]
window = next(w for w in windows if len(w) == 4)

cfg = D.TrainConfig(encoder="hierarchical", attention="soft", emb_dim=8, word_hidden=6,
                    sentence_hidden=7, decoder_hidden=9, label_emb_dim=4, attention_dim=5,
                    dropout=0.0)
tagger = D.Seq2SeqTagger(vocab, cfg, np.random.default_rng(3))

n_sequences = vocab.n_labels ** len(window)
print(f"\nuntrained model over a {len(window)}-utterance window, "
      f"{vocab.n_labels} labels -> {n_sequences} possible sequences")

oracle = exhaustive_decode(tagger, window)
print(f"exhaustive argmax: {oracle.labels} score {oracle.score:.5f}")

for width in (1, 2, 5, n_sequences):
    top = beam_search(tagger, window, BeamConfig(width=width))[0]
    marker = "== exhaustive" if top.labels == oracle.labels else ""
    print(f"beam width {width:3d}: {top.labels} score {top.score:.5f} {marker}")

print(f"greedy == beam(1): {greedy_decode(tagger, window) == list(beam_search(tagger, window, BeamConfig(width=1))[0].labels)}")
