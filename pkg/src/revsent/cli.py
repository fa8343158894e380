"""Command-line entry point: ``revsent <subcommand> ...``.

Every run writes its primary outputs deterministically; the seed, the
command line and a timestamp go into a ``<output>.meta.json`` sidecar.
Failures print one line, ``error: <kind>: <detail>``, to stderr.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import corpus, encoder as enc, evaluation, labeling, tokenizer, trainer
from .baselines import KINDS, run_baselines, save_baseline, tfidf_fit_transform, train_baseline

OUTPUT_ENV = "REVSENT_OUTPUT_DIR"
SUBCOMMANDS = ("ingest", "label", "split", "baseline", "finetune", "grid", "eval", "report")

logger = logging.getLogger("revsent")


class ConfigError(ValueError):
    def __init__(self, key: str, reason: str):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


# -- run config file ---------------------------------------------------------

_CONFIG_KEYS = {
    "learning_rate": float,
    "batch_size": int,
    "epochs": int,
    "seed": int,
    "max_len": int,
    "decay": float,
    "dropout": float,
    "encoder.L": int,
    "encoder.H": int,
    "encoder.A": int,
    "encoder.ffn": int,
    "encoder.vocab": int,
    "labeling": str,
    "ratios": str,
    "lrs": str,
    "batch_sizes": str,
    "epoch_choices": str,
    "reviews": Path,
    "lexicon": Path,
    "vocab": Path,
    "stopwords": Path,
    "keywords": Path,
    "train": Path,
    "validation": Path,
    "test": Path,
    "init": Path,
    "output_dir": Path,
}
_PATH_KEYS = {k for k, t in _CONFIG_KEYS.items() if t is Path and k != "output_dir"}


def read_run_config(path: str | Path) -> dict:
    """Parse a flat ``key = value`` file (``#`` comments, blank lines ignored)."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            sep = "=" if "=" in line else ":" if ":" in line else None
            if sep is None:
                raise ConfigError(f"line {lineno}", "expected 'key = value'")
            key, value = (s.strip() for s in line.split(sep, 1))
            if key not in _CONFIG_KEYS:
                raise ConfigError(key, "unknown key")
            try:
                values[key] = _CONFIG_KEYS[key](value)
            except ValueError:
                raise ConfigError(key, f"cannot parse {value!r} as {_CONFIG_KEYS[key].__name__}") from None
    return values


@dataclass
class PipelineConfig:
    """Flags merged over the config file; flags win."""

    values: dict = field(default_factory=dict)

    def get(self, key: str, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def require(self, key: str):
        v = self.values.get(key)
        if v is None:
            raise ConfigError(key, "required but not set")
        return v

    def validate_paths(self) -> None:
        for key in sorted(_PATH_KEYS):
            v = self.values.get(key)
            if v is None:
                continue
            paths = v if isinstance(v, list) else [v]
            for p in paths:
                if not Path(p).exists():
                    raise ConfigError(key, f"path {p} does not exist")


def _merge(args: argparse.Namespace, mapping: dict[str, str]) -> PipelineConfig:
    values = read_run_config(args.config) if getattr(args, "config", None) else {}
    for key, attr in mapping.items():
        v = getattr(args, attr, None)
        if v is not None:
            values[key] = v
    cfg = PipelineConfig(values)
    cfg.validate_paths()
    return cfg


def _float_list(key: str, text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as a comma-separated number list") from None


def _int_list(key: str, text) -> list[int]:
    vals = _float_list(key, text)
    if any(not v.is_integer() for v in vals):
        raise ConfigError(key, "expected integers")
    return [int(v) for v in vals]


# -- outputs -----------------------------------------------------------------


def _output_dir(args) -> Path:
    base = os.environ.get(OUTPUT_ENV) or getattr(args, "out_dir", None) or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_meta(target: Path, args, seed: int | None, **extra) -> None:
    meta = {
        "seed": seed,
        "command": args.command,
        "argv": getattr(args, "_argv", []),
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        **extra,
    }
    with open(str(target) + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# -- labelled data helpers ------------------------------------------------------


def _read_labelled(path: Path) -> tuple[list[str], list[int]]:
    rows = corpus.read_table(path)
    if rows and "label" not in rows[0]:
        raise ConfigError(str(path), "file has no 'label' column; run 'label' first")
    texts = [r.get("content", "") for r in rows]
    labels = [int(labeling.Sentiment.parse(r["label"])) for r in rows]
    return texts, labels


def _encoder_config(cfg: PipelineConfig, vocab_size: int, max_len: int) -> enc.EncoderConfig:
    try:
        return enc.EncoderConfig(
            n_layers=cfg.get("encoder.L", 2),
            hidden_size=cfg.get("encoder.H", 64),
            n_heads=cfg.get("encoder.A", 2),
            ffn_size=cfg.get("encoder.ffn"),
            vocab_size=cfg.get("encoder.vocab", vocab_size),
            max_positions=max(max_len, 2),
            dropout=cfg.get("dropout", 0.0),
        )
    except ValueError as exc:
        raise ConfigError("encoder", str(exc)) from None


def _train_config(cfg: PipelineConfig) -> trainer.TrainConfig:
    try:
        return trainer.TrainConfig(
            learning_rate=cfg.get("learning_rate", 1e-3),
            batch_size=cfg.get("batch_size", 16),
            epochs=cfg.get("epochs", 10),
            decay=cfg.get("decay", 1e-4),
            seed=cfg.get("seed", 0),
            max_len=cfg.get("max_len", 128),
        )
    except ValueError as exc:
        msg = str(exc)
        key = msg.split(" ", 1)[0]
        raise ConfigError(key, msg) from None


def _prepare_encoded(cfg: PipelineConfig, out: Path, need_test: bool = True):
    train_texts, train_y = _read_labelled(cfg.require("train"))
    val_texts, val_y = _read_labelled(cfg.require("validation"))
    test = None
    if need_test:
        test_texts, test_y = _read_labelled(cfg.require("test"))
    max_len = cfg.get("max_len", 128)
    if not 2 <= max_len <= tokenizer.MAX_POSITIONS:
        raise ConfigError("max_len", f"must be in 2..{tokenizer.MAX_POSITIONS}")
    if cfg.get("vocab") is not None:
        vocab = tokenizer.load_vocab(cfg.get("vocab"))
    else:
        vocab = tokenizer.build_vocab(train_texts)
        vocab.save(out / "vocab.txt")
    train = tokenizer.encode_batch(train_texts, vocab, max_len, train_y)
    val = tokenizer.encode_batch(val_texts, vocab, max_len, val_y)
    if need_test:
        test = tokenizer.encode_batch(test_texts, vocab, max_len, test_y)
    return vocab, train, val, test


def _initial_params(cfg: PipelineConfig, ec: enc.EncoderConfig, seed: int):
    init = cfg.get("init")
    if init is None:
        return None
    return enc.init_from_pretrained(init, ec, seed)


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    cfg = _merge(args, {"reviews": "input", "keywords": "keywords", "stopwords": "stopwords", "seed": "seed"})
    out_dir = _output_dir(args)
    result = corpus.read_reviews(cfg.require("reviews"), args.format)
    records = corpus.deduplicate(result.records) if args.dedup else result.records
    words: list[str] = []
    for key in ("keywords", "stopwords"):
        if cfg.get(key) is not None:
            words.extend(corpus.load_wordlist(cfg.get(key)))
    words.extend(args.app_name or [])
    rows, dropped = [], 0
    for rec in records:
        text = corpus.preprocess(rec.content, words, strip_punctuation=args.strip_punctuation)
        if not text:
            dropped += 1
            continue
        row = rec.to_row()
        row["content"] = text
        rows.append(row)
    out = Path(args.out) if args.out else out_dir / "clean.csv"
    corpus.write_reviews(out, rows)
    _write_meta(
        out, args, cfg.get("seed", 0),
        rows_in=result.n_rows, loaded=len(result.records), rejected=[str(r) for r in result.rejected],
        empty_after_cleaning=dropped, rows_out=len(rows),
    )
    print(f"{len(rows)} reviews written to {out} ({len(result.rejected)} rejected, {dropped} empty after cleaning)")
    return 0


def cmd_label(args) -> int:
    cfg = _merge(args, {"reviews": "input", "lexicon": "lexicon", "labeling": "method", "seed": "seed"})
    out_dir = _output_dir(args)
    method = cfg.require("labeling")
    if method not in ("score", "lexicon"):
        raise ConfigError("labeling", f"must be 'score' or 'lexicon', got {method!r}")
    records = corpus.read_reviews(cfg.require("reviews"), args.format).records
    if method == "lexicon":
        lex_paths = cfg.get("lexicon")
        if lex_paths is None:
            raise ConfigError("lexicon", "required for --method lexicon")
        lex = labeling.load_lexicon(*(lex_paths if isinstance(lex_paths, list) else [lex_paths]))
        labels = [labeling.label_by_lexicon(r.content, lex) for r in records]
    else:
        labels = [labeling.label_by_score(r.score) for r in records]
    rows = []
    for rec, lab in zip(records, labels):
        row = rec.to_row()
        row["label"] = lab.label
        rows.append(row)
    out = Path(args.out) if args.out else out_dir / f"labeled_{method}.csv"
    corpus.write_reviews(out, rows, corpus.REVIEW_COLUMNS + ("label",))
    dist = labeling.class_distribution(labels)
    _write_meta(out, args, cfg.get("seed", 0), method=method, distribution={s.label: c for s, c in dist.items()})
    print(f"{len(rows)} rows labelled by {method}: " + ", ".join(f"{s.label}={c}" for s, c in dist.items()))
    return 0


def cmd_split(args) -> int:
    cfg = _merge(args, {"reviews": "input", "ratios": "ratios", "seed": "seed"})
    out_dir = _output_dir(args)
    ratios = _float_list("ratios", cfg.get("ratios", "0.9,0.05,0.05"))
    seed = cfg.get("seed", 0)
    rows = corpus.read_table(cfg.require("reviews"))
    if not rows:
        raise ConfigError("reviews", "input has no rows")
    columns = list(rows[0].keys())
    try:
        parts = corpus.split(rows, ratios, seed)
    except ValueError as exc:
        raise ConfigError("ratios", str(exc)) from None
    for name, part in (("train", parts.train), ("validation", parts.validation), ("test", parts.test)):
        path = out_dir / f"{name}.csv"
        corpus.write_reviews(path, part, columns)
        _write_meta(path, args, seed, ratios=ratios, size=len(part))
    print("split sizes train/validation/test = %d/%d/%d" % parts.sizes)
    return 0


def cmd_baseline(args) -> int:
    cfg = _merge(args, {"train": "train", "test": "test", "seed": "seed", "labeling": "labeling"})
    out_dir = _output_dir(args)
    seed = cfg.get("seed", 0)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for k in kinds:
        if k not in KINDS:
            raise ConfigError("kinds", f"unknown model {k!r}")
    train_texts, train_y = _read_labelled(cfg.require("train"))
    test_texts, test_y = _read_labelled(cfg.require("test"))
    seeded = {k: {"seed": seed} for k in ("svm", "tree", "forest")}
    hp = {k: v for k, v in seeded.items() if k in kinds}
    rows = run_baselines(
        train_texts, train_y, test_texts, test_y, kinds=kinds, k=args.folds, seed=seed,
        labeling=cfg.get("labeling", ""), hyperparams=hp,
    )
    out = out_dir / "baselines.csv"
    _write_text(out, evaluation.render_baseline_report(rows, "csv"))
    _write_text(out_dir / "baselines.md", evaluation.render_baseline_report(rows, "markdown"))
    _write_meta(out, args, seed, folds=args.folds, kinds=kinds)
    if args.save_models:
        space, X = tfidf_fit_transform(train_texts)
        for k in kinds:
            model = train_baseline(k, X, train_y, hp.get(k), feature_space=space)
            save_baseline(model, out_dir / f"baseline_{k}.json")
    print(evaluation.render_baseline_report(rows, "markdown"), end="")
    return 0


_TRAIN_MAP = {
    "train": "train",
    "validation": "validation",
    "test": "test",
    "vocab": "vocab",
    "init": "init",
    "seed": "seed",
    "max_len": "max_len",
    "learning_rate": "lr",
    "batch_size": "batch_size",
    "epochs": "epochs",
    "decay": "decay",
    "dropout": "dropout",
    "encoder.L": "layers",
    "encoder.H": "hidden",
    "encoder.A": "heads",
    "encoder.ffn": "ffn",
    "labeling": "labeling",
}


def cmd_finetune(args) -> int:
    cfg = _merge(args, _TRAIN_MAP)
    out_dir = _output_dir(args)
    tc = _train_config(cfg)
    vocab, train, val, test = _prepare_encoded(cfg, out_dir)
    ec = _encoder_config(cfg, len(vocab), tc.max_len)
    params = _initial_params(cfg, ec, tc.seed)
    if params is None:
        params = enc.init_params(ec, tc.seed)
    best, hist = trainer.fine_tune(params, ec, train, val, tc)
    weights = out_dir / "best.weights"
    enc.save_params(best, weights, ec)
    _write_text(out_dir / "history.csv", hist.to_csv())
    report = evaluation.RunReport(
        model=args.model_name,
        labeling=cfg.get("labeling", ""),
        batch_size=tc.batch_size,
        learning_rate=tc.learning_rate,
        epochs=tc.epochs,
        avg_train_acc=float(np.mean(hist.train_acc)),
        avg_val_acc=float(np.mean(hist.val_acc)),
        train_time_s=hist.duration_s,
        test_acc=trainer.evaluate(best, ec, test),
    )
    _write_text(out_dir / "report.csv", evaluation.render_report([report], "csv"))
    for path in (weights, out_dir / "history.csv", out_dir / "report.csv"):
        _write_meta(path, args, tc.seed, best_epoch=hist.best_epoch, train_time_s=hist.duration_s)
    print(evaluation.render_report([report], "markdown"), end="")
    return 0


def cmd_grid(args) -> int:
    mapping = dict(_TRAIN_MAP, lrs="lrs", batch_sizes="batch_sizes", epoch_choices="epoch_list")
    cfg = _merge(args, mapping)
    out_dir = _output_dir(args)
    lrs = _float_list("lrs", cfg.get("lrs", "1e-5,2e-5,3e-5"))
    batch_sizes = _int_list("batch_sizes", cfg.get("batch_sizes", "16,32"))
    epoch_choices = _int_list("epoch_choices", cfg.get("epoch_choices", "10"))
    if not (lrs and batch_sizes and epoch_choices):
        raise ConfigError("grid", "every grid axis needs at least one value")
    base = _train_config(cfg)
    vocab, train, val, test = _prepare_encoded(cfg, out_dir)
    ec = _encoder_config(cfg, len(vocab), base.max_len)
    init = _initial_params(cfg, ec, base.seed)
    cells = trainer.run_grid(
        ec, base, lrs, batch_sizes, epoch_choices, train, val, test,
        init=init, model_name=args.model_name, labeling=cfg.get("labeling", ""), jobs=args.jobs,
    )
    reports = [c.report for c in cells]
    out = out_dir / "grid_report.csv"
    _write_text(out, evaluation.render_report(reports, "csv"))
    _write_text(out_dir / "grid_report.md", evaluation.render_report(reports, "markdown"))
    for i, c in enumerate(cells):
        if c.history is not None:
            _write_text(out_dir / f"history_{i:02d}.csv", c.history.to_csv())
    failures = [r.error for r in reports if r.error]
    _write_meta(out, args, base.seed, cells=len(reports), failures=failures)
    print(evaluation.render_report(reports, "markdown"), end="")
    return 0 if not failures else 1


def cmd_eval(args) -> int:
    cfg = _merge(args, {"test": "input", "vocab": "vocab", "max_len": "max_len", "seed": "seed"})
    out_dir = _output_dir(args)
    params, ec = enc.load_params(args.weights)
    if ec is None:
        raise ConfigError("weights", "file carries no encoder config")
    vocab = tokenizer.load_vocab(cfg.require("vocab"))
    texts, golds = _read_labelled(cfg.require("test"))
    max_len = cfg.get("max_len", min(128, ec.max_positions))
    data = tokenizer.encode_batch(texts, vocab, max_len, golds)
    preds = enc.predict(params, ec, data)
    cm = evaluation.confusion(preds, golds, ec.n_classes)
    result = {
        "accuracy": evaluation.format_accuracy(evaluation.accuracy(preds, golds)),
        "n": len(golds),
        "confusion": cm.counts.tolist(),
    }
    out = out_dir / "eval.json"
    _write_text(out, json.dumps(result, indent=2, sort_keys=True) + "\n")
    _write_meta(out, args, cfg.get("seed", 0), weights=str(args.weights))
    print(f"accuracy {result['accuracy']} on {len(golds)} examples")
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.input:
        with open(path, encoding="utf-8") as fh:
            rows.extend(evaluation.parse_report_csv(fh.read()))
    text = evaluation.render_report(rows, args.format)
    if args.out:
        _write_text(Path(args.out), text)
        _write_meta(Path(args.out), args, None, sources=[str(p) for p in args.input])
    else:
        sys.stdout.write(text)
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="seed for every random choice in the run")
    common.add_argument("--config", type=Path, help="flat key = value run config; flags override it")
    common.add_argument("--out-dir", help=f"output directory (env {OUTPUT_ENV} overrides)")
    common.add_argument("-v", "--verbose", action="store_true")

    train_opts = argparse.ArgumentParser(add_help=False)
    train_opts.add_argument("--train", type=Path)
    train_opts.add_argument("--validation", type=Path)
    train_opts.add_argument("--test", type=Path)
    train_opts.add_argument("--vocab", type=Path, help="vocab.txt; built from the training texts when omitted")
    train_opts.add_argument("--init", type=Path, help="weights file with converted pretrained tensors")
    train_opts.add_argument("--max-len", type=int)
    train_opts.add_argument("--batch-size", type=int)
    train_opts.add_argument("--decay", type=float)
    train_opts.add_argument("--dropout", type=float)
    train_opts.add_argument("--layers", type=int)
    train_opts.add_argument("--hidden", type=int)
    train_opts.add_argument("--heads", type=int)
    train_opts.add_argument("--ffn", type=int)
    train_opts.add_argument("--labeling")
    train_opts.add_argument("--model-name", default="encoder")

    parser = argparse.ArgumentParser(prog="revsent", description="Sentiment pipeline for app-store reviews.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}")

    p = sub.add_parser("ingest", parents=[common], help="validate and clean a review export")
    p.add_argument("--in", dest="input", type=Path)
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--keywords", type=Path, help="app-name keyword file")
    p.add_argument("--stopwords", type=Path)
    p.add_argument("--app-name", action="append", help="extra keyword to strip (repeatable)")
    p.add_argument("--strip-punctuation", action="store_true")
    p.add_argument("--dedup", action="store_true", help="drop repeated review ids")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", parents=[common], help="attach score- or lexicon-based labels")
    p.add_argument("--method", choices=("score", "lexicon"))
    p.add_argument("--in", dest="input", type=Path)
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--lexicon", type=Path, action="append", help="lexicon TSV (repeat to merge files)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("split", parents=[common], help="shuffle into train/validation/test")
    p.add_argument("--in", dest="input", type=Path)
    p.add_argument("--ratios", help="train,validation,test fractions (default 0.9,0.05,0.05)")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("baseline", parents=[common], help="TF-IDF baselines with k-fold CV")
    p.add_argument("--train", type=Path)
    p.add_argument("--test", type=Path)
    p.add_argument("--kinds", default=",".join(KINDS))
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--labeling")
    p.add_argument("--save-models", action="store_true")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("finetune", parents=[common, train_opts], help="train the encoder once")
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("grid", parents=[common, train_opts], help="learning-rate x batch-size x epochs grid")
    p.add_argument("--lrs")
    p.add_argument("--batch-sizes")
    p.add_argument("--epochs", dest="epoch_list")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("eval", parents=[common], help="score saved weights on a labelled file")
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--vocab", type=Path)
    p.add_argument("--in", dest="input", type=Path)
    p.add_argument("--max-len", type=int)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", parents=[common], help="re-render report CSVs")
    p.add_argument("--in", dest="input", type=Path, nargs="+", required=True)
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split())


def dispatch(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    args._argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc.key}: {' '.join(exc.reason.split())}", file=sys.stderr)
        return 1
    except (ValueError, OSError, FloatingPointError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
