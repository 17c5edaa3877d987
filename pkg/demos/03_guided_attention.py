#!/usr/bin/env python3
"""Compare the attention matrices of the three attention mechanisms on one
window. With a one-to-one utterance/label alignment, hard guidance pins the
matrix to the identity and soft guidance biases the diagonal."""

import numpy as np

import dialact as D
from dialact.corpus import build_vocab, encode_window, windows_for_corpus
from dialact.synthetic import make_synthetic_corpus

np.set_printoptions(precision=3, suppress=True)

convs = make_synthetic_corpus("local", 8, seed=4)
vocab = build_vocab(convs)
windows = [encode_window(w, vocab, 20) for w in windows_for_corpus(convs, 5)]
window = next(w for w in windows if len(w) == 5)

for mode in ("additive", "soft", "hard"):
    cfg = D.TrainConfig(encoder="hierarchical", attention=mode, emb_dim=8, word_hidden=6,
                        sentence_hidden=7, decoder_hidden=9, label_emb_dim=4,
                        attention_dim=5, dropout=0.0)
    tagger = D.Seq2SeqTagger(vocab, cfg, np.random.default_rng(7))
    matrix = tagger.attention_rows(window)
    print(f"\n{mode} attention (rows = decode steps, columns = encoder positions):")
    print(matrix)
    print(f"rows sum to 1: {np.allclose(matrix.sum(axis=1), 1.0)}")

print("\nwith zeroed scorer weights, soft guidance gives e/(e+L-1) on the diagonal:")
cfg = D.TrainConfig(encoder="hierarchical", attention="soft", emb_dim=8, word_hidden=6,
                    sentence_hidden=7, decoder_hidden=9, label_emb_dim=4,
                    attention_dim=5, dropout=0.0)
tagger = D.Seq2SeqTagger(vocab, cfg, np.random.default_rng(7))
for name in ("dec.att_w1", "dec.att_w2", "dec.att_v"):
    tagger.store[name].value[...] = 0.0
print(tagger.attention_rows(window))
print(f"expected diagonal value e/(e+4) = {np.e / (np.e + 4):.6f}")
