"""Model assembly and checkpoint round-trips."""

import io

import numpy as np
import numpy.testing as npt
import pytest

import dialact as D
from dialact.model import load_checkpoint, save_checkpoint

from helpers import tiny_setup


def test_checkpoint_roundtrip_is_bit_exact():
    vocab, window, tagger, _ = tiny_setup(seed=21)
    # push values through a loss/step so they are not just init values
    tagger.store["dec.out_b"].value[...] = np.pi / 3

    buf = io.StringIO()
    save_checkpoint(tagger.store, buf)
    buf.seek(0)
    values = load_checkpoint(buf)
    assert set(values) == set(tagger.store.names())
    for name, node in tagger.store.items():
        npt.assert_array_equal(values[name], node.value)


def test_checkpoint_header_is_versioned():
    vocab, window, tagger, _ = tiny_setup(seed=22)
    buf = io.StringIO()
    save_checkpoint(tagger.store, buf)
    assert buf.getvalue().splitlines()[0] == "dialact-checkpoint 1"
    bad = io.StringIO("dialact-checkpoint 999\n")
    with pytest.raises(ValueError, match="header"):
        load_checkpoint(bad)


def test_store_load_validates_shapes():
    vocab, window, tagger, _ = tiny_setup(seed=23)
    snapshot = tagger.store.snapshot()
    snapshot["dec.out_b"] = np.zeros(99)
    with pytest.raises(ValueError, match="shape"):
        tagger.store.load(snapshot)
    del snapshot["dec.out_b"]
    with pytest.raises(KeyError):
        tagger.store.load(snapshot)


def test_models_share_predict_interface():
    for model_kind in ("seq2seq", "crf"):
        vocab, window, tagger, _ = tiny_setup(seed=24, model=model_kind)
        labels, score = tagger.predict_labels(window)
        assert len(labels) == len(window)
        assert isinstance(score, float)


def test_same_seed_same_initial_parameters():
    _, _, a, _ = tiny_setup(seed=25)
    _, _, b, _ = tiny_setup(seed=25)
    for name, node in a.store.items():
        npt.assert_array_equal(node.value, b.store[name].value)


def test_pretrained_embedding_is_used_and_trainable():
    vocab, window, tagger, cfg = tiny_setup(seed=26)
    fixed = np.full((vocab.n_words, cfg.emb_dim), 0.25)
    model = D.Seq2SeqTagger(vocab, cfg, np.random.default_rng(0), embedding=fixed)
    npt.assert_array_equal(model.store["embedding"].value, fixed)
    assert model.store["embedding"].requires_grad

    with pytest.raises(ValueError, match="shape"):
        D.Seq2SeqTagger(vocab, cfg, np.random.default_rng(0),
                        embedding=np.zeros((vocab.n_words, cfg.emb_dim + 1)))


def test_bridge_created_only_when_sizes_differ():
    vocab, window, tagger, cfg = tiny_setup(seed=27)
    assert "dec.bridge_w" in tagger.store  # 2*4 != 6 in the tiny setup

    import dataclasses

    cfg_eq = dataclasses.replace(cfg, decoder_hidden=2 * cfg.sentence_hidden)
    flat = D.Seq2SeqTagger(vocab, cfg_eq, np.random.default_rng(0))
    assert "dec.bridge_w" not in flat.store
    labels, _ = flat.predict_labels(window)
    assert len(labels) == len(window)
