"""Beam search, greedy decoding, exhaustive oracle."""

import math

import numpy as np
import numpy.testing as npt
import pytest

from dialact.search import (
    BeamConfig,
    beam_search,
    exhaustive_decode,
    greedy_decode,
    length_penalty,
)

from helpers import TableModel, tiny_setup


def test_length_penalty_values():
    for alpha in (0.0, 0.5, 0.65, 1.0):
        assert length_penalty(1, alpha) == 1.0
    npt.assert_allclose(length_penalty(5, 1.0), 10.0 / 6.0, rtol=1e-15)
    # high-precision evaluation of (10/6)**0.65
    npt.assert_allclose(length_penalty(5, 0.65), 1.3938039380837821, rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        length_penalty(0, 0.65)


def test_beam_config_validation():
    with pytest.raises(ValueError):
        BeamConfig(width=0)
    with pytest.raises(ValueError):
        BeamConfig(width=2, alpha=-0.1)


def test_beam_width_one_equals_greedy():
    for seed in range(6):
        model = TableModel(n_labels=4, length=5, seed=seed)
        top = beam_search(model, None, BeamConfig(width=1))[0]
        assert list(top.labels) == greedy_decode(model, None)


def test_full_width_beam_matches_exhaustive():
    for seed in range(10):
        model = TableModel(n_labels=3, length=4, seed=seed)
        top = beam_search(model, None, BeamConfig(width=3**4))[0]
        oracle = exhaustive_decode(model, None)
        assert top.labels == oracle.labels
        assert abs(top.score - oracle.score) < 1e-12


def test_full_width_beam_matches_exhaustive_real_model():
    for seed in (0, 1, 2):
        vocab, window, tagger, _ = tiny_setup(seed=100 + seed, attention="soft", window_length=4)
        width = vocab.n_labels ** len(window)
        top = beam_search(tagger, window, BeamConfig(width=width))[0]
        oracle = exhaustive_decode(tagger, window)
        assert top.labels == oracle.labels


def test_point_mass_model_invariant_to_width():
    # One label carries almost all probability at every step.
    class Peaked:
        n_labels = 4

        def decode_session(self, window):
            return _PeakedSession()

    class _PeakedSession:
        n_labels = 4
        length = 5
        start_state = 0

        def step(self, state, prev_label):
            lp = np.full(4, -50.0)
            lp[(state * 2) % 4] = -1e-9
            return lp, state + 1

    model = Peaked()
    expected = greedy_decode(model, None)
    for width in (1, 2, 4, 16):
        top = beam_search(model, None, BeamConfig(width=width))[0]
        assert list(top.labels) == expected


def test_beam_scores_monotone_in_width():
    for seed in range(5):
        model = TableModel(n_labels=4, length=5, seed=200 + seed)
        prev = -math.inf
        for width in range(1, 12):
            score = beam_search(model, None, BeamConfig(width=width))[0].score
            assert score >= prev - 1e-15
            prev = score


def test_beam_outputs_have_window_length_and_are_sorted():
    model = TableModel(n_labels=3, length=4, seed=9)
    hyps = beam_search(model, None, BeamConfig(width=7))
    assert len(hyps) == 7
    for h in hyps:
        assert len(h.labels) == 4
        npt.assert_allclose(h.score, h.logprob / length_penalty(4, 0.65), rtol=1e-15)
    scores = [h.score for h in hyps]
    assert scores == sorted(scores, reverse=True)


def test_exhaustive_single_position_is_first_step_argmax():
    model = TableModel(n_labels=5, length=1, seed=3)
    lp = model.logprobs_for(())
    oracle = exhaustive_decode(model, None)
    assert oracle.labels == (int(lp.argmax()),)


def test_exhaustive_uniform_model_tie_breaks_first():
    class Uniform:
        def decode_session(self, window):
            return _UniformSession()

    class _UniformSession:
        n_labels = 3
        length = 3
        start_state = None

        def step(self, state, prev_label):
            return np.full(3, math.log(1 / 3)), None

    oracle = exhaustive_decode(Uniform(), None)
    assert oracle.labels == (0, 0, 0)
    top = beam_search(Uniform(), None, BeamConfig(width=27))[0]
    assert top.labels == (0, 0, 0)


def test_exhaustive_cap():
    model = TableModel(n_labels=10, length=7, seed=1)
    with pytest.raises(ValueError, match="cap"):
        exhaustive_decode(model, None, cap=10**6)


def test_search_is_deterministic():
    model = TableModel(n_labels=4, length=5, seed=77)
    a = beam_search(model, None, BeamConfig(width=5))
    b = beam_search(model, None, BeamConfig(width=5))
    assert [h.labels for h in a] == [h.labels for h in b]
    assert [h.score for h in a] == [h.score for h in b]
