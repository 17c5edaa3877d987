"""Run configuration: dataclass, named profiles, INI files and overrides.

Config files are INI-style, one section per profile::

    [swda-run]
    base = swda
    epochs = 80

``base`` pulls in a built-in profile first; remaining keys override it.
Command-line overrides (``key=value``) are applied last.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from typing import IO

__all__ = ["TrainConfig", "apply_overrides", "load_config", "write_config"]


@dataclass
class TrainConfig:
    # model
    model: str = "seq2seq"  # seq2seq | crf
    encoder: str = "hierarchical"  # mean | hierarchical | speaker
    attention: str = "hard"  # none | additive | hard | soft
    emb_dim: int = 300
    word_hidden: int = 128
    persona_hidden: int = 128
    sentence_hidden: int = 128
    decoder_hidden: int = 48
    label_emb_dim: int = 32
    attention_dim: int = 64
    # data
    context_size: int = 5
    max_tokens: int = 20
    min_frequency: int = 1
    dev_fraction: float = 0.1
    embeddings_path: str = ""
    # optimization
    optimizer: str = "adam"  # adam | adamw
    lr: float = 0.01
    weight_decay: float = 1e-5
    scheduler_patience: int = 20
    scheduler_factor: float = 0.5
    grad_clip: float = 5.0
    dropout: float = 0.2
    batch_size: int = 32
    epochs: int = 100
    stop_accuracy: float = 0.0  # stop once best dev accuracy reaches this; 0 disables
    # decoding / sequence-level fine-tuning
    beam_train: int = 2
    beam_infer: int = 1
    length_alpha: float = 0.65
    risk_cost: str = "sequence"  # sequence | hamming
    seed: int = 1

    def __post_init__(self) -> None:
        if self.model not in ("seq2seq", "crf"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.optimizer not in ("adam", "adamw"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.risk_cost not in ("sequence", "hamming"):
            raise ValueError(f"unknown risk cost {self.risk_cost!r}")

    @classmethod
    def profile(cls, name: str) -> "TrainConfig":
        """Built-in profiles. `swda` and `mrda` mirror the published training
        recipes for the two benchmark corpora."""
        if name in ("default", ""):
            return cls()
        if name == "swda":
            return cls(
                encoder="hierarchical",
                attention="hard",
                optimizer="adam",
                lr=0.01,
                weight_decay=1e-5,
                scheduler_patience=20,
                scheduler_factor=0.5,
                grad_clip=5.0,
                dropout=0.2,
                max_tokens=20,
                emb_dim=300,
                word_hidden=128,
                persona_hidden=128,
                sentence_hidden=128,
                decoder_hidden=48,
                context_size=5,
                beam_train=2,
                beam_infer=5,
            )
        if name == "mrda":
            return cls(
                encoder="hierarchical",
                attention="hard",
                optimizer="adamw",
                lr=0.001,
                weight_decay=5e-5,
                scheduler_patience=15,
                scheduler_factor=0.5,
                grad_clip=5.0,
                dropout=0.3,
                max_tokens=30,
                emb_dim=300,
                word_hidden=40,
                persona_hidden=40,
                sentence_hidden=40,
                decoder_hidden=400,
                context_size=5,
                beam_train=5,
                beam_infer=1,
            )
        raise ValueError(f"unknown profile {name!r}; built-ins are default, swda, mrda")


_FIELD_TYPES = {f.name: type(getattr(TrainConfig(), f.name)) for f in fields(TrainConfig)}


def _parse_value(key: str, raw: str):
    if key not in _FIELD_TYPES:
        valid = ", ".join(sorted(_FIELD_TYPES))
        raise KeyError(f"unknown config key {key!r}; valid keys: {valid}")
    typ = _FIELD_TYPES[key]
    raw = raw.strip()
    if typ is int:
        return int(raw)
    if typ is float:
        return float(raw)
    return raw


def apply_overrides(cfg: TrainConfig, overrides: list[str]) -> TrainConfig:
    """Apply `key=value` strings on top of a config."""
    values = {f.name: getattr(cfg, f.name) for f in fields(TrainConfig)}
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        values[key] = _parse_value(key, raw)
    return TrainConfig(**values)


def load_config(path: str, profile: str = "", overrides: list[str] | None = None) -> TrainConfig:
    """Read one section of an INI file into a TrainConfig.

    With an empty `profile`, a single-section file selects that section and a
    sectionless call means built-in defaults.
    """
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fp:
        parser.read_file(fp)
    sections = parser.sections()
    if profile:
        if profile not in sections:
            raise KeyError(f"profile {profile!r} not found in {path}; sections: {sections}")
        section = parser[profile]
    elif len(sections) == 1:
        section = parser[sections[0]]
    else:
        raise KeyError(f"config {path} has sections {sections}; pass a profile to pick one")

    base = TrainConfig.profile(section.get("base", "default"))
    values = {f.name: getattr(base, f.name) for f in fields(TrainConfig)}
    for key, raw in section.items():
        if key == "base":
            continue
        values[key] = _parse_value(key, raw)
    cfg = TrainConfig(**values)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def write_config(cfg: TrainConfig, fp: IO[str], section: str = "run") -> None:
    """Write a fully resolved config as one INI section."""
    fp.write(f"[{section}]\n")
    for f in fields(TrainConfig):
        fp.write(f"{f.name} = {getattr(cfg, f.name)}\n")
