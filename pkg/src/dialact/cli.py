"""Command-line driver.

Subcommands: train, finetune-risk, eval, predict, dump-attention,
gen-synthetic. A training run writes a self-contained model directory
(params.ckpt, vocab.txt, config.ini, metrics.tsv) that the evaluation and
prediction commands load back.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .config import TrainConfig, apply_overrides, load_config, write_config
from .corpus import EncodedWindow, Vocabulary, build_vocab, encode_window, windows_for_corpus
from .model import build_model, load_checkpoint, save_checkpoint
from .search import BeamConfig
from .synthetic import make_synthetic_corpus
from .training import evaluate, finetune_risk, train, write_metrics

# The ten-tag confusion view used for the telephone-corpus label set.
SWDA_TOP10 = ("sd", "b", "sv", "fc", "qw", "bk", "h", "qo", "no", "ft")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, KeyError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dialact", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="token-level training")
    p.add_argument("--config", required=True, help="INI config file")
    p.add_argument("--profile", default="", help="section of the config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--corpus", required=True, help="training corpus TSV")
    p.add_argument("--dev", default="", help="dev corpus TSV (default: split from --corpus)")
    p.add_argument("--out", required=True, help="output model directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("finetune-risk", help="sequence-level fine-tuning of a trained model")
    p.add_argument("--init", required=True, help="model directory from `train`")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dev", default="")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_finetune)

    p = sub.add_parser("eval", help="last-label accuracy and confusion counts")
    p.add_argument("--model", required=True, help="model directory")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory for the report")
    p.add_argument("--b-inf", type=int, default=None, help="beam width (default from config)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("predict", help="write per-window predictions as TSV")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output TSV file")
    p.add_argument("--b-inf", type=int, default=None)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("dump-attention", help="write one attention matrix CSV per window")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_dump_attention)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic corpus TSV")
    p.add_argument("--kind", required=True, choices=("local", "global"))
    p.add_argument("--size", type=int, required=True, help="number of conversations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_synthetic)

    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _read_corpus(path: str):
    with open(path, encoding="utf-8") as fp:
        return corpus_mod.parse_corpus(fp)


def _split_dev(conversations, fraction: float, seed: int):
    """Deterministic held-out split by conversation."""
    n_dev = max(1, round(len(conversations) * fraction))
    if n_dev >= len(conversations):
        raise ValueError(f"cannot hold out {n_dev} of {len(conversations)} conversations")
    order = np.random.default_rng(seed).permutation(len(conversations))
    dev_ids = set(order[:n_dev].tolist())
    train_convs = [c for i, c in enumerate(conversations) if i not in dev_ids]
    dev_convs = [c for i, c in enumerate(conversations) if i in dev_ids]
    return train_convs, dev_convs


def _encode_all(conversations, vocab: Vocabulary, cfg: TrainConfig) -> list[EncodedWindow]:
    windows = windows_for_corpus(conversations, cfg.context_size)
    return [encode_window(w, vocab, cfg.max_tokens) for w in windows]


def _save_run(out_dir: str, model, vocab: Vocabulary, cfg: TrainConfig, metrics) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "params.ckpt", "w", encoding="utf-8") as fp:
        save_checkpoint(model.store, fp)
    with open(out / "vocab.txt", "w", encoding="utf-8") as fp:
        vocab.save(fp)
    with open(out / "config.ini", "w", encoding="utf-8") as fp:
        write_config(cfg, fp)
    with open(out / "metrics.tsv", "w", encoding="utf-8") as fp:
        write_metrics(metrics, fp)


def _load_run(model_dir: str):
    run = Path(model_dir)
    cfg = load_config(str(run / "config.ini"))
    with open(run / "vocab.txt", encoding="utf-8") as fp:
        vocab = Vocabulary.load(fp)
    model = build_model(vocab, cfg, np.random.default_rng(cfg.seed))
    with open(run / "params.ckpt", encoding="utf-8") as fp:
        model.store.load(load_checkpoint(fp))
    return model, vocab, cfg


def _prepare_data(args, cfg: TrainConfig, vocab: Vocabulary | None = None):
    convs = _read_corpus(args.corpus)
    if args.dev:
        dev_convs = _read_corpus(args.dev)
        train_convs = convs
    else:
        train_convs, dev_convs = _split_dev(convs, cfg.dev_fraction, cfg.seed)
    if vocab is None:
        vocab = build_vocab(train_convs, cfg.min_frequency)
    return _encode_all(train_convs, vocab, cfg), _encode_all(dev_convs, vocab, cfg), vocab


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_train(args) -> int:
    cfg = load_config(args.config, args.profile, args.overrides)
    if args.seed is not None:
        cfg = apply_overrides(cfg, [f"seed={args.seed}"])
    train_w, dev_w, vocab = _prepare_data(args, cfg)

    embedding = None
    if cfg.embeddings_path:
        with open(cfg.embeddings_path, encoding="utf-8") as fp:
            embedding = corpus_mod.load_word_vectors(fp, vocab, cfg.emb_dim, cfg.seed).vectors

    model = build_model(vocab, cfg, np.random.default_rng(cfg.seed), embedding)
    result = train(model, train_w, dev_w, cfg)
    _save_run(args.out, model, vocab, cfg, result.metrics)
    print(f"trained {cfg.model} for {result.epochs_run} epochs; "
          f"best dev accuracy {result.best_accuracy:.4f}; model in {args.out}")
    return 0


def _cmd_finetune(args) -> int:
    model, vocab, cfg = _load_run(args.init)
    if args.overrides:
        cfg = apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        cfg = apply_overrides(cfg, [f"seed={args.seed}"])
    if cfg.model != "seq2seq":
        raise ValueError("sequence-level fine-tuning applies to the seq2seq model only")
    model.cfg = cfg
    train_w, dev_w, _ = _prepare_data(args, cfg, vocab)
    result = finetune_risk(model, train_w, dev_w, cfg)
    _save_run(args.out, model, vocab, cfg, result.metrics)
    print(f"fine-tuned for {result.epochs_run} epochs; "
          f"best dev accuracy {result.best_accuracy:.4f}; model in {args.out}")
    return 0


def _eval_beam(cfg: TrainConfig, b_inf: int | None) -> BeamConfig:
    width = cfg.beam_infer if b_inf is None else b_inf
    return BeamConfig(width=width, alpha=cfg.length_alpha)


def _cmd_eval(args) -> int:
    model, vocab, cfg = _load_run(args.model)
    windows = _encode_all(_read_corpus(args.corpus), vocab, cfg)
    report = evaluate(model, windows, _eval_beam(cfg, args.b_inf), seed=cfg.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    labels = vocab.labels()
    with open(out / "report.txt", "w", encoding="utf-8") as fp:
        fp.write(f"last_label_accuracy = {report.accuracy:.17g}\n")
        fp.write(f"n_windows = {report.n_windows}\n")
        fp.write(f"seed = {report.seed}\n")
    _write_confusion(out / "confusion.tsv", report, labels, labels)
    if all(tag in labels for tag in SWDA_TOP10):
        _write_confusion(out / "confusion_swda10.tsv", report, labels, SWDA_TOP10)
    print(f"last-label accuracy {report.accuracy:.4f} over {report.n_windows} windows")
    return 0


def _write_confusion(path, report, labels, view) -> None:
    index = {lab: i for i, lab in enumerate(labels)}
    with open(path, "w", encoding="utf-8") as fp:
        fp.write("gold\\pred\t" + "\t".join(view) + "\n")
        for g in view:
            counts = [report.confusion.get((index[g], index[p]), 0) for p in view]
            fp.write(g + "\t" + "\t".join(str(c) for c in counts) + "\n")


def _cmd_predict(args) -> int:
    model, vocab, cfg = _load_run(args.model)
    windows = _encode_all(_read_corpus(args.corpus), vocab, cfg)
    beam = _eval_beam(cfg, args.b_inf)
    labels = vocab.labels()
    with open(args.out, "w", encoding="utf-8") as fp:
        fp.write("conversation_id\tutterance_index\tgold_label\tpredicted_label\tscore\n")
        for w in windows:
            predicted, score = model.predict_labels(w, beam)
            fp.write(
                f"{w.conversation_id}\t{w.last_index}\t{labels[w.label_ids[-1]]}"
                f"\t{labels[predicted[-1]]}\t{score:.17g}\n"
            )
    print(f"wrote {len(windows)} predictions to {args.out}")
    return 0


def _cmd_dump_attention(args) -> int:
    model, vocab, cfg = _load_run(args.model)
    if cfg.model != "seq2seq":
        raise ValueError("attention matrices exist for the seq2seq model only")
    windows = _encode_all(_read_corpus(args.corpus), vocab, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for w in windows:
        matrix = model.attention_rows(w)
        path = out / f"{w.conversation_id}_utt{w.last_index:04d}.csv"
        with open(path, "w", encoding="utf-8") as fp:
            for r in matrix:
                fp.write(",".join(f"{x:.17g}" for x in r) + "\n")
    print(f"wrote {len(windows)} attention matrices to {args.out}")
    return 0


def _cmd_gen_synthetic(args) -> int:
    convs = make_synthetic_corpus(args.kind, args.size, args.seed)
    with open(args.out, "w", encoding="utf-8") as fp:
        fp.write(corpus_mod.serialize_corpus(convs))
    print(f"wrote {len(convs)} conversations to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
