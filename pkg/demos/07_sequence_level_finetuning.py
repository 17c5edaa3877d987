#!/usr/bin/env python3
"""Fine-tune a token-level model with the expected-cost loss over beam
candidates, and walk through the loss itself on hand-sized candidate sets."""

import dataclasses

import numpy as np

import dialact as D
from dialact import autodiff as ad
from dialact.corpus import build_vocab, encode_window, windows_for_corpus
from dialact.synthetic import make_synthetic_corpus
from dialact.training import finetune_risk, risk_loss, train

# the loss on hand-sized candidate sets: renormalized mass on wrong sequences
gold = (1, 2)
lp = lambda p: ad.constant(np.log(p))
print("expected-cost loss on small candidate sets:")
print("  {gold}:                                ",
      float(risk_loss([(gold, lp(0.37))], gold).value))
print("  {gold p=0.6, wrong p=0.2}:             ",
      float(risk_loss([(gold, lp(0.6)), ((0, 0), lp(0.2))], gold).value))
print("  {wrong p=0.3, wrong p=0.15} (no gold): ",
      float(risk_loss([((0, 0), lp(0.3)), ((2, 2), lp(0.15))], gold).value))

# token-level training, then sequence-level fine-tuning with beam candidates
convs = make_synthetic_corpus("local", 120, seed=33)
vocab = build_vocab(convs)
train_w = [encode_window(w, vocab, 20) for w in windows_for_corpus(convs[:96], 5)]
dev_w = [encode_window(w, vocab, 20) for w in windows_for_corpus(convs[96:], 5)]

cfg = D.TrainConfig(
    encoder="hierarchical", attention="hard",
    emb_dim=12, word_hidden=8, sentence_hidden=12, decoder_hidden=16,
    label_emb_dim=6, attention_dim=6, dropout=0.0, weight_decay=0.0,
    lr=0.01, batch_size=32, epochs=4, beam_infer=1, seed=7,
)
tagger = D.Seq2SeqTagger(vocab, cfg, np.random.default_rng(cfg.seed))
token_result = train(tagger, train_w, dev_w, cfg)
print(f"\ntoken-level training:  dev accuracy {token_result.best_accuracy:.3f} "
      f"after {token_result.epochs_run} epochs")

ft_cfg = dataclasses.replace(cfg, epochs=2, lr=0.002, beam_train=2)
tagger.cfg = ft_cfg
ft_result = finetune_risk(tagger, train_w, dev_w, ft_cfg)
print(f"sequence-level tuning: dev accuracy {ft_result.best_accuracy:.3f} "
      f"after {ft_result.epochs_run} epochs (beam width {ft_cfg.beam_train})")
