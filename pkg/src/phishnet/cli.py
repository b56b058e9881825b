"""Command-line entry point.

Subcommands: fetch, prepare, train, eval, predict, finetune, features,
baseline, project, gen-synthetic. Exit codes: 0 success, 2 usage error,
3 data error, 4 numeric failure.

Every subcommand accepts --config FILE with one key=value pair per line
(keys are the long flag names without the leading dashes, # starts a
comment); explicit flags win over config values. All randomness flows from
--seed. No subcommand mutates its inputs.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import baselines, metrics
from .corpus import Label, load_manifest, split, write_manifest
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import DataError, NumericError
from .features import (
    DEFAULT_MISLEADING_WORDS,
    FEATURE_NAMES,
    load_wordlist,
    read_feature_csv,
    sample_features,
    write_feature_csv,
)
from .fetcher import build_corpus
from .model import (
    ModelConfig,
    concat_features,
    encode_samples,
    forward,
    predict as model_predict,
)
from .projection import TsneConfig, pca_2d, tsne_2d
from .synthetic import generate_corpus, shifted_markers_corpus
from .tokenizer import EncoderConfig, build_vocab
from .train import TrainConfig, evaluate, fine_tune, train, write_history_csv

FC_PRESETS = {1: (32,), 2: (32, 16), 3: (32, 16, 8)}


def _parse_ratios(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"ratios must be numbers, got {text!r}")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios need exactly three comma-separated values")
    return parts  # the sum constraint is checked by split()


def _parse_units(text: str) -> tuple[int, ...]:
    try:
        units = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"unit widths must be integers, got {text!r}")
    return units


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model configuration")
    group.add_argument("--variant", choices=["full", "url_only", "html_only"],
                       default="full", help="which input branches to use")
    group.add_argument("--conv-layers", type=int, choices=[1, 2, 3], default=1,
                       help="stacked convolution layers per branch")
    group.add_argument("--fc-layers", type=int, choices=[1, 2, 3], default=2,
                       help="fully connected layers (widths 32/16/8 tapering)")
    group.add_argument("--fc-units", type=_parse_units, default=None,
                       help="explicit FC widths, e.g. 32,16 (overrides --fc-layers)")
    group.add_argument("--filters", type=int, default=16,
                       help="convolution filters per branch")
    group.add_argument("--kernel-width", type=int, default=8,
                       help="convolution kernel width in characters")
    group.add_argument("--embed-dim", type=int, default=16,
                       help="character embedding dimension")
    group.add_argument("--url-len", type=int, default=180,
                       help="URL sequence length in characters")
    group.add_argument("--html-len", type=int, default=2000,
                       help="HTML sequence length in characters")
    group.add_argument("--no-embedding", action="store_true",
                       help="replace learned embeddings with frozen one-hot rows")


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training configuration")
    group.add_argument("--epochs", type=int, default=20, help="maximum training epochs")
    group.add_argument("--batch-size", type=int, default=20, help="mini-batch size")
    group.add_argument("--patience", type=int, default=3,
                       help="early-stopping patience in epochs")
    group.add_argument("--lr", type=float, default=0.0015, help="Adam learning rate")
    group.add_argument("--weight-classes", action="store_true",
                       help="reweight the loss by inverse class frequency")


def _model_config(args: argparse.Namespace) -> ModelConfig:
    fc_units = args.fc_units if args.fc_units is not None else FC_PRESETS[args.fc_layers]
    return ModelConfig(
        embed_dim=args.embed_dim,
        url_len=args.url_len,
        html_len=args.html_len,
        kernel_width=args.kernel_width,
        conv_filters=args.filters,
        conv_layers=args.conv_layers,
        fc_units=fc_units,
        variant=args.variant,
        use_embedding=not args.no_embedding,
    )


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        early_stopping_patience=args.patience,
        seed=args.seed,
        learning_rate=args.lr,
        weight_classes=args.weight_classes,
    )


def _split_corpus(args: argparse.Namespace):
    """Resolve (train, val) sample lists from the manifest flags."""
    samples, _ = load_manifest(args.manifest)
    if args.val_manifest:
        val_samples, _ = load_manifest(args.val_manifest)
        return samples, val_samples, None
    parts = split(samples, seed=args.seed, ratios=args.ratios)
    return parts.train, parts.validation, parts.test


def _encode_corpus(config, train_samples, val_samples):
    url_vocab = build_vocab([s.normalized_url for s in train_samples])
    html_vocab = build_vocab([s.html for s in train_samples])
    enc = EncoderConfig(url_len=config.url_len, html_len=config.html_len)
    train_data = encode_samples(train_samples, url_vocab, html_vocab, enc)
    val_data = encode_samples(val_samples, url_vocab, html_vocab, enc)
    return url_vocab, html_vocab, train_data, val_data


def cmd_fetch(args) -> int:
    manifest_path, report = build_corpus(
        args.urls,
        Label.from_name(args.label),
        args.out,
        concurrency=args.concurrency,
        rate_limit=args.rate_limit,
        per_host_interval=args.per_host_interval,
        timeout=args.timeout,
        max_redirects=args.max_redirects,
    )
    print(report.render(), end="")
    print(f"manifest: {manifest_path}")
    return 0


def cmd_prepare(args) -> int:
    samples, report = load_manifest(args.manifest)
    parts = split(samples, seed=args.seed, ratios=args.ratios)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", parts.train), ("val", parts.validation), ("test", parts.test)):
        write_manifest(out_dir / f"{name}.jsonl", part)
    (out_dir / "sanitization_report.txt").write_text(report.render(), encoding="utf-8")
    print(report.render(), end="")
    print(f"split sizes: train={len(parts.train)} val={len(parts.validation)} test={len(parts.test)}")
    return 0


def cmd_train(args) -> int:
    config = _model_config(args)
    tcfg = _train_config(args)
    train_samples, val_samples, test_samples = _split_corpus(args)
    url_vocab, html_vocab, train_data, val_data = _encode_corpus(
        config, train_samples, val_samples
    )
    result = train(config, tcfg, train_data, val_data, url_vocab.size, html_vocab.size)
    save_checkpoint(result.params, config, url_vocab, html_vocab, args.out)
    if args.history:
        write_history_csv(result.history, args.history)
    if args.test_out and test_samples is not None:
        write_manifest(args.test_out, test_samples)
    last = result.history[-1]
    print(f"epochs run: {len(result.history)}  best epoch: {result.best_epoch}")
    print(f"final val_loss {last.val_loss:.6f}  val_acc {last.val_acc:.4f}")
    print(f"checkpoint: {args.out}")
    return 0


def _scores_for_manifest(model_path, manifest_path, threshold=0.5):
    params, config, url_vocab, html_vocab = load_checkpoint(model_path)
    if url_vocab is None or html_vocab is None:
        raise DataError("checkpoint carries no vocabularies")
    samples, _ = load_manifest(manifest_path)
    if not samples:
        raise DataError(f"no usable samples in {manifest_path}")
    enc = EncoderConfig(url_len=config.url_len, html_len=config.html_len)
    data = encode_samples(samples, url_vocab, html_vocab, enc)
    scores = np.empty(data.size)
    step = 256
    for start in range(0, data.size, step):
        idx = slice(start, min(start + step, data.size))
        from .model import EncodedBatch
        scores[idx] = forward(params, config, EncodedBatch(
            url_ids=data.url_ids[idx],
            html_ids=data.html_ids[idx],
        ))
    predictions = (scores > threshold).astype(int)
    return samples, scores, predictions


def cmd_eval(args) -> int:
    samples, scores, predictions = _scores_for_manifest(args.model, args.manifest, args.threshold)
    labels = [int(s.label) for s in samples]
    cm = metrics.confusion(labels, predictions)
    text = metrics.render_report(cm)
    if len(set(labels)) == 2:
        curve = metrics.roc_auc(scores, labels)
        text += f"auc       {curve.auc:.6f}\n"
        if args.roc_out:
            metrics.write_roc_csv(curve, args.roc_out)
    print(text, end="")
    if args.report_out:
        Path(args.report_out).write_text(text, encoding="utf-8")
    return 0


def cmd_predict(args) -> int:
    if args.manifest:
        samples, scores, predictions = _scores_for_manifest(args.model, args.manifest, args.threshold)
        rows = [
            (s.id, Label(int(p)).canonical_name, repr(float(score)))
            for s, score, p in zip(samples, scores, predictions)
        ]
        if args.out:
            with Path(args.out).open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["id", "prediction", "score"])
                writer.writerows(rows)
        else:
            for row in rows:
                print(",".join(row))
        return 0
    if not args.url:
        raise DataError("predict needs either --manifest or --url")
    if args.html_file:
        html = Path(args.html_file).read_bytes().decode("utf-8", errors="replace")
    elif args.html is not None:
        html = args.html
    else:
        raise DataError("predict --url needs --html or --html-file")
    params, config, url_vocab, html_vocab = load_checkpoint(args.model)
    from .corpus import WebPageSample, normalize_url
    sample = WebPageSample(
        id="cli", raw_url=args.url, normalized_url=normalize_url(args.url),
        html=html, label=Label.LEGITIMATE,
    )
    label, score = model_predict(params, config, sample, url_vocab, html_vocab,
                                 threshold=args.threshold)
    print(f"{label.canonical_name} {score:.6f}")
    return 0


def cmd_finetune(args) -> int:
    params, config, url_vocab, html_vocab = load_checkpoint(args.model)
    if url_vocab is None or html_vocab is None:
        raise DataError("donor checkpoint carries no vocabularies")
    tcfg = _train_config(args)
    train_samples, val_samples, _ = _split_corpus(args)
    enc = EncoderConfig(url_len=config.url_len, html_len=config.html_len)
    train_data = encode_samples(train_samples, url_vocab, html_vocab, enc)
    val_data = encode_samples(val_samples, url_vocab, html_vocab, enc)
    result = fine_tune(params, config, tcfg, train_data, val_data)
    save_checkpoint(result.params, config, url_vocab, html_vocab, args.out)
    val_loss, val_acc = evaluate(result.params, config, val_data)
    print(f"epochs run: {len(result.history)}  best epoch: {result.best_epoch}")
    print(f"val_loss {val_loss:.6f}  val_acc {val_acc:.4f}")
    print(f"checkpoint: {args.out}")
    return 0


def cmd_features(args) -> int:
    samples, _ = load_manifest(args.manifest)
    if not samples:
        raise DataError(f"no usable samples in {args.manifest}")
    wordlist = load_wordlist(args.wordlist) if args.wordlist else DEFAULT_MISLEADING_WORDS
    matrix = np.stack([sample_features(s, wordlist) for s in samples])
    write_feature_csv(args.out, [s.id for s in samples], [s.label for s in samples], matrix)
    print(f"wrote {matrix.shape[0]} rows x {matrix.shape[1]} features to {args.out}")
    return 0


def cmd_baseline(args) -> int:
    _, train_labels, train_x = read_feature_csv(args.train_features)
    eval_ids, eval_labels, eval_x = read_feature_csv(args.eval_features)
    if args.algo == "logreg":
        scaler = baselines.fit_scaler(train_x)
        model = baselines.train_logreg(
            baselines.apply_scaler(scaler, train_x), train_labels,
            l1_lambda=args.l1_lambda, epochs=args.logreg_epochs, lr=args.logreg_lr,
        )
        scores = baselines.logreg_scores(model, baselines.apply_scaler(scaler, eval_x))
    else:
        model = baselines.train_random_forest(train_x, train_labels, seed=args.seed)
        scores = baselines.rf_scores(model, eval_x)
        if args.importance_out:
            importance = baselines.feature_importance(model)
            order = np.argsort(-importance)
            with Path(args.importance_out).open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["feature_name", "importance"])
                for i in order:
                    writer.writerow([FEATURE_NAMES[i], repr(float(importance[i]))])
    predictions = (scores > 0.5).astype(int)
    cm = metrics.confusion(eval_labels, predictions)
    text = metrics.render_report(cm)
    if len(set(eval_labels.tolist())) == 2:
        curve = metrics.roc_auc(scores, eval_labels)
        text += f"auc       {curve.auc:.6f}\n"
    print(text, end="")
    if args.report_out:
        Path(args.report_out).write_text(text, encoding="utf-8")
    return 0


def cmd_project(args) -> int:
    if args.features:
        ids, labels, matrix = read_feature_csv(args.features)
    elif args.model and args.manifest:
        params, config, url_vocab, html_vocab = load_checkpoint(args.model)
        if url_vocab is None or html_vocab is None:
            raise DataError("checkpoint carries no vocabularies")
        samples, _ = load_manifest(args.manifest)
        if not samples:
            raise DataError(f"no usable samples in {args.manifest}")
        enc = EncoderConfig(url_len=config.url_len, html_len=config.html_len)
        data = encode_samples(samples, url_vocab, html_vocab, enc)
        from .model import EncodedBatch
        parts = []
        for start in range(0, data.size, 256):
            idx = slice(start, min(start + 256, data.size))
            parts.append(concat_features(params, config, EncodedBatch(
                url_ids=data.url_ids[idx], html_ids=data.html_ids[idx])))
        matrix = np.vstack(parts)
        ids = [s.id for s in samples]
        labels = np.array([int(s.label) for s in samples])
        if args.features_out:
            header = ["id", "label"] + [f"f{i}" for i in range(matrix.shape[1])]
            with Path(args.features_out).open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                for sid, lab, row in zip(ids, labels, matrix):
                    writer.writerow([sid, Label(int(lab)).canonical_name,
                                     *[repr(float(x)) for x in row]])
    else:
        raise DataError("project needs --features or both --model and --manifest")
    if args.method == "pca":
        coords = pca_2d(matrix)
    else:
        config_t = TsneConfig(perplexity=args.perplexity, iterations=args.iterations,
                              seed=args.seed)
        coords = tsne_2d(matrix, config_t).coordinates
    with Path(args.out).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label", "x", "y"])
        for sid, lab, (x, y) in zip(ids, labels, coords):
            writer.writerow([sid, Label(int(lab)).canonical_name, repr(float(x)), repr(float(y))])
    print(f"wrote {coords.shape[0]} projected points to {args.out}")
    return 0


def cmd_gen_synthetic(args) -> int:
    maker = shifted_markers_corpus if args.shifted else generate_corpus
    samples = maker(
        args.size,
        seed=args.seed,
        phish_fraction=args.phish_fraction,
        url_signal_rate=args.url_signal_rate,
        html_signal_rate=args.html_signal_rate,
        approx_html_chars=args.html_chars,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.jsonl"
    write_manifest(manifest_path, samples)
    n_phish = sum(1 for s in samples if s.label is Label.PHISHING)
    print(f"wrote {len(samples)} samples ({n_phish} phishing) to {manifest_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phishnet",
        description="Phishing web-page detection from raw URL and HTML characters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="key=value defaults file; explicit flags win")
        p.add_argument("--seed", type=int, default=0, help="seed for all randomness")

    p = sub.add_parser("fetch", help="fetch URLs into a labeled corpus")
    common(p)
    p.add_argument("--urls", required=True, help="file with one URL per line")
    p.add_argument("--label", required=True, choices=["legitimate", "phishing"],
                   help="label recorded for every fetched page")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--concurrency", type=int, default=4, help="parallel requests")
    p.add_argument("--rate-limit", type=float, default=None,
                   help="global request rate cap (requests/second)")
    p.add_argument("--per-host-interval", type=float, default=1.0,
                   help="politeness floor between hits on one host (seconds)")
    p.add_argument("--timeout", type=float, default=20.0, help="per-request timeout")
    p.add_argument("--max-redirects", type=int, default=10, help="redirect hop limit")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("prepare", help="sanitize a manifest and write split manifests")
    common(p)
    p.add_argument("--manifest", required=True, help="input JSON-Lines manifest")
    p.add_argument("--out-dir", required=True, help="directory for train/val/test manifests")
    p.add_argument("--ratios", type=_parse_ratios, default=(0.8, 0.1, 0.1),
                   help="train,val,test fractions (default 0.8,0.1,0.1)")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a model from a manifest")
    common(p)
    p.add_argument("--manifest", required=True, help="training manifest")
    p.add_argument("--val-manifest", default=None,
                   help="validation manifest (otherwise split internally)")
    p.add_argument("--ratios", type=_parse_ratios, default=(0.8, 0.1, 0.1),
                   help="internal split fractions when no --val-manifest")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--history", default=None, help="training history CSV path")
    p.add_argument("--test-out", default=None,
                   help="write the internal test split as a manifest")
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a labeled manifest")
    common(p)
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--manifest", required=True, help="evaluation manifest")
    p.add_argument("--threshold", type=float, default=0.5, help="phishing score cut")
    p.add_argument("--roc-out", default=None, help="ROC CSV output path")
    p.add_argument("--report-out", default=None, help="metrics report output path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="score single pages or a manifest")
    common(p)
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--manifest", default=None, help="manifest to score in batch")
    p.add_argument("--url", default=None, help="single URL to score")
    p.add_argument("--html", default=None, help="inline HTML for --url")
    p.add_argument("--html-file", default=None, help="HTML file for --url")
    p.add_argument("--threshold", type=float, default=0.5, help="phishing score cut")
    p.add_argument("--out", default=None, help="CSV output path for batch scoring")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("finetune", help="transfer a checkpoint to a new corpus")
    common(p)
    p.add_argument("--model", required=True, help="donor checkpoint")
    p.add_argument("--manifest", required=True, help="new training manifest")
    p.add_argument("--val-manifest", default=None,
                   help="validation manifest (otherwise split internally)")
    p.add_argument("--ratios", type=_parse_ratios, default=(0.8, 0.1, 0.1),
                   help="internal split fractions when no --val-manifest")
    p.add_argument("--out", required=True, help="checkpoint output path")
    _add_train_flags(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("features", help="extract the 31 manual features to CSV")
    common(p)
    p.add_argument("--manifest", required=True, help="input manifest")
    p.add_argument("--out", required=True, help="feature CSV output path")
    p.add_argument("--wordlist", default=None,
                   help="custom misleading-word list (one word per line)")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("baseline", help="train/evaluate classical baselines on features")
    common(p)
    p.add_argument("--algo", required=True, choices=["logreg", "rf"],
                   help="logistic regression (L1) or random forest (70 trees)")
    p.add_argument("--train-features", required=True, help="training feature CSV")
    p.add_argument("--eval-features", required=True, help="evaluation feature CSV")
    p.add_argument("--l1-lambda", type=float, default=1e-3,
                   help="L1 strength for logistic regression")
    p.add_argument("--logreg-epochs", type=int, default=500,
                   help="full-batch epochs for logistic regression")
    p.add_argument("--logreg-lr", type=float, default=0.1,
                   help="step size for logistic regression")
    p.add_argument("--importance-out", default=None,
                   help="feature importance CSV (rf only)")
    p.add_argument("--report-out", default=None, help="metrics report output path")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("project", help="2-D projection of model or manual features")
    common(p)
    p.add_argument("--features", default=None, help="input feature CSV")
    p.add_argument("--model", default=None, help="checkpoint for concat-layer features")
    p.add_argument("--manifest", default=None, help="manifest paired with --model")
    p.add_argument("--features-out", default=None,
                   help="also write the extracted concat-layer features")
    p.add_argument("--method", choices=["tsne", "pca"], default="tsne",
                   help="projection method")
    p.add_argument("--perplexity", type=float, default=30.0, help="t-SNE perplexity")
    p.add_argument("--iterations", type=int, default=1000, help="t-SNE iterations")
    p.add_argument("--out", required=True, help="projection CSV output path")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic labeled corpus")
    common(p)
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--size", type=int, default=1100, help="total sample count")
    p.add_argument("--phish-fraction", type=float, default=1.0 / 11.0,
                   help="phishing share of the corpus (default 1/11)")
    p.add_argument("--url-signal-rate", type=float, default=1.0,
                   help="fraction of phishing URLs carrying bait tokens")
    p.add_argument("--html-signal-rate", type=float, default=1.0,
                   help="fraction of phishing pages carrying HTML markers")
    p.add_argument("--html-chars", type=int, default=1200,
                   help="approximate HTML length per page")
    p.add_argument("--shifted", action="store_true",
                   help="use the shifted marker distribution (transfer target)")
    p.set_defaults(func=cmd_gen_synthetic)
    return parser


def _apply_config_file(argv: list[str]) -> list[str]:
    """Insert key=value pairs from --config as flags right after the
    subcommand, so explicitly passed flags take precedence."""
    if not argv or "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv  # argparse will report the missing value
    config_path = Path(argv[i + 1])
    if not config_path.is_file():
        raise DataError(f"config file not found: {config_path}")
    injected: list[str] = []
    for line_no, line in enumerate(config_path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{config_path} line {line_no}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        flag = f"--{key}"
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                injected.append(flag)
        else:
            injected.extend([flag, value])
    return [argv[0], *injected, *argv[1:]]


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        argv = _apply_config_file(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse usage failures
        code = exc.code if isinstance(exc.code, int) else 2
        return 2 if code != 0 else 0
    except DataError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
