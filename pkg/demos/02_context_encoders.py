#!/usr/bin/env python3
"""Run one utterance window through the three context encoders and look at
what the speaker-aware layer does at speaker boundaries."""

import numpy as np

import dialact as D
from dialact import autodiff as ad
from dialact.corpus import build_vocab, encode_window, parse_corpus, window_conversation
from dialact.encoder import gru_cell, persona_layer

LINES = [
    "c1\tA\tqw\thow long does that take",
    "c1\tB\tsd\tabout forty five minutes",
    "c1\tB\tsd\tmaybe a bit more",
    "c1\tA\tb\tuh huh",
    "c1\tA\tqw\tso what school is it",
]

convs = parse_corpus(LINES)
vocab = build_vocab(convs)
window = encode_window(window_conversation(convs[0], 5)[-1], vocab, max_tokens=20)
print(f"window of {len(window)} utterances, speakers {window.speakers}")

for kind in ("mean", "hierarchical", "speaker"):
    cfg = D.TrainConfig(encoder=kind, attention="hard", emb_dim=8, word_hidden=6,
                        persona_hidden=6, sentence_hidden=7, decoder_hidden=9,
                        label_emb_dim=4, attention_dim=4, dropout=0.0)
    tagger = D.Seq2SeqTagger(vocab, cfg, np.random.default_rng(1))
    enc = tagger.encode(window)
    print(f"{kind:13s}: {len(enc.states)} states of dim {enc.states[0].value.shape[0]}, "
          f"summary dim {enc.summary.value.shape[0]} "
          f"(= state at the last position: {np.array_equal(enc.summary.value, enc.states[-1].value)})")

# The speaker-aware layer resets its recurrent state at speaker changes, so
# with alternating speakers every position starts from scratch.
print("\nspeaker-boundary resets (alternating speakers => position-local states):")
store = ad.ParamStore()
from dialact.encoder import init_gru_params

fwd = init_gru_params(store, "pf", 4, 3, np.random.default_rng(2))
bwd = init_gru_params(store, "pb", 4, 3, np.random.default_rng(3))
embs = [ad.constant(v) for v in np.random.default_rng(4).normal(size=(4, 4))]
out = persona_layer(embs, ("A", "B", "A", "B"), fwd, bwd)
for k in range(4):
    fresh = np.concatenate([
        gru_cell(embs[k], ad.zeros(3), fwd).value,
        gru_cell(embs[k], ad.zeros(3), bwd).value,
    ])
    print(f"  position {k}: equals a single step from zero state: "
          f"{np.array_equal(out[k].value, fresh)}")
