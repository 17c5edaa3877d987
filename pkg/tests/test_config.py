"""Config profiles, INI round-trips, overrides."""

import io

import pytest

from dialact.config import TrainConfig, apply_overrides, load_config, write_config


def test_swda_profile_values():
    cfg = TrainConfig.profile("swda")
    assert cfg.optimizer == "adam"
    assert cfg.lr == 0.01
    assert cfg.scheduler_patience == 20
    assert cfg.scheduler_factor == 0.5
    assert cfg.grad_clip == 5.0
    assert cfg.weight_decay == 1e-5
    assert cfg.dropout == 0.2
    assert cfg.max_tokens == 20
    assert cfg.emb_dim == 300
    assert cfg.sentence_hidden == 128
    assert cfg.decoder_hidden == 48
    assert cfg.context_size == 5
    assert (cfg.beam_train, cfg.beam_infer) == (2, 5)


def test_mrda_profile_values():
    cfg = TrainConfig.profile("mrda")
    assert cfg.optimizer == "adamw"
    assert cfg.lr == 0.001
    assert cfg.scheduler_patience == 15
    assert cfg.scheduler_factor == 0.5
    assert cfg.weight_decay == 5e-5
    assert cfg.dropout == 0.3
    assert cfg.max_tokens == 30
    assert cfg.sentence_hidden == 40
    assert cfg.decoder_hidden == 400
    assert (cfg.beam_train, cfg.beam_infer) == (5, 1)


def test_unknown_profile():
    with pytest.raises(ValueError, match="profile"):
        TrainConfig.profile("esperanto")


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(model="transformer")
    with pytest.raises(ValueError):
        TrainConfig(optimizer="sgd")
    with pytest.raises(ValueError):
        TrainConfig(risk_cost="levenshtein")


def test_overrides_apply_and_type_check():
    cfg = apply_overrides(TrainConfig(), ["epochs=7", "lr=0.25", "encoder=mean"])
    assert cfg.epochs == 7
    assert cfg.lr == 0.25
    assert cfg.encoder == "mean"


def test_override_unknown_key_lists_valid_keys():
    with pytest.raises(KeyError, match="valid keys.*epochs"):
        apply_overrides(TrainConfig(), ["not_a_key=3"])


def test_override_requires_key_value_form():
    with pytest.raises(ValueError, match="key=value"):
        apply_overrides(TrainConfig(), ["epochs"])


def test_load_config_with_base_and_overrides(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[exp]\nbase = mrda\nepochs = 3\nlr = 0.5\n")
    cfg = load_config(str(path), "exp", ["batch_size=4"])
    assert cfg.optimizer == "adamw"  # from the mrda base
    assert cfg.epochs == 3
    assert cfg.lr == 0.5
    assert cfg.batch_size == 4


def test_load_config_single_section_needs_no_profile(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[only]\nepochs = 2\n")
    assert load_config(str(path)).epochs == 2


def test_load_config_missing_profile(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[a]\nepochs = 1\n\n[b]\nepochs = 2\n")
    with pytest.raises(KeyError, match="pick one"):
        load_config(str(path))
    with pytest.raises(KeyError, match="not found"):
        load_config(str(path), "c")


def test_write_then_load_roundtrip(tmp_path):
    cfg = TrainConfig.profile("swda")
    buf = io.StringIO()
    write_config(cfg, buf)
    path = tmp_path / "resolved.ini"
    path.write_text(buf.getvalue())
    assert load_config(str(path), "run") == cfg
