"""Command-line entry point: the annotate-train-predict flow as
subcommands.

Every failure exits nonzero after printing a single `error[<Code>]:` line
to stderr, where the code is the exception class name. The SEQFORGE_LOG
environment variable picks the log level.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import load_config
from .errors import FileUnreadable, SeqforgeError
from .evaluation import evaluate_documents, format_report, write_report
from .formats import (
    load_split,
    segment_document,
    write_brat_directory,
    write_conll,
)
from .nn import load_model
from .training import predict_split, train

logger = logging.getLogger(__name__)


def _setup_logging():
    level = os.environ.get("SEQFORGE_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s")


def _resolve_paths(config, config_path: Path):
    """Relative paths inside a config file are taken relative to the file."""
    base = config_path.parent
    updates = {}
    for key in ("dataset_folder", "token_emb_pretrained_file"):
        value = getattr(config, key)
        if value and not Path(value).is_absolute():
            updates[key] = str((base / value).resolve())
    return config.replace(**updates) if updates else config


def _load_config_file(path_str: str):
    path = Path(path_str)
    try:
        config = load_config(path)
    except OSError as exc:
        raise FileUnreadable(f"cannot read config {path}: {exc}")
    return _resolve_paths(config, path)


def cmd_train(args) -> int:
    config = _load_config_file(args.config)

    def on_epoch(record):
        parts = [f"epoch {record.epoch:3d}"]
        for split in ("train", "valid", "test"):
            m = record.metrics.get(split)
            if m:
                parts.append(f"{split} f1 {m.f1:5.1f}")
        parts.append(f"loss {record.train_loss:.4f}")
        parts.append(f"{record.seconds:.1f}s")
        print("  ".join(parts))

    outcome = train(config, output_root=args.output, on_epoch=on_epoch)
    print(f"stopped ({outcome.stop_reason}); best epoch {outcome.best_epoch} "
          f"with valid f1 {outcome.best_valid_f1:.1f}")
    print(f"checkpoint: {outcome.checkpoint_path}")
    print(f"metrics: {outcome.output_dir / 'metrics.csv'}")
    return 0


def cmd_predict(args) -> int:
    params, vocab, config = load_model(args.model)
    split = load_split(args.input, "deploy")
    if not split.documents:
        logger.warning("input directory %s has no documents", args.input)
        print("no input documents; nothing to do")
        return 0
    predicted = predict_split(params, vocab, config, split.documents)
    out = Path(args.output)
    if args.format == "conll":
        out.mkdir(parents=True, exist_ok=True)
        target = out / "predictions.conll"
        if target.exists() and not args.force:
            raise FileExistsError(f"{target} exists; pass --force to overwrite")
        target.write_text(write_conll(predicted), encoding="utf-8")
    else:
        write_brat_directory(predicted, out, force=args.force)
    print(f"tagged {len(predicted)} documents -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    gold = load_split(args.gold, "test")
    pred = load_split(args.pred, "test")
    gold_docs = [doc if doc.sentences else segment_document(doc, snap=True)
                 for doc in gold.documents]
    report = evaluate_documents(gold_docs, list(pred.documents))
    print(format_report(report))
    report_path = Path(args.report)
    if report_path.exists() and not args.force:
        raise FileExistsError(f"{report_path} exists; pass --force to overwrite")
    write_report(report, report_path)
    print(f"report: {report_path}")
    return 0


def cmd_convert(args) -> int:
    split = load_split(args.input, "train")
    docs = list(split.documents)
    out = Path(args.output)
    if args.to == "conll":
        logger.warning(
            "CoNLL output canonicalizes whitespace; original spacing is "
            "not preserved")
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"{Path(args.input).name}.conll"
        if target.exists() and not args.force:
            raise FileExistsError(f"{target} exists; pass --force to overwrite")
        target.write_text(write_conll(docs, snap=True), encoding="utf-8")
    else:
        write_brat_directory(docs, out, force=args.force)
    print(f"converted {len(docs)} documents -> {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_config_file(args.config)
    ui_dir = Path(args.ui) if args.ui else _default_ui_dir()
    app = create_app(config, output_root=args.output, ui_dir=ui_dir)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        raise SeqforgeError(f"server failed to start on port {args.port}: {exc}")
    return 0


def _default_ui_dir() -> Path | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqforge",
        description="Neural named-entity recognition: train on BRAT or "
                    "CoNLL annotations, tag new text, and close the "
                    "annotate-train-predict loop.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True, help="path to the INI config")
    p.add_argument("--output", default="output", help="output folder root")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="tag documents with a trained model")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--input", required=True, help="directory of documents")
    p.add_argument("--output", required=True, help="directory for predictions")
    p.add_argument("--format", choices=("brat", "conll"), default="brat")
    p.add_argument("--force", action="store_true",
                   help="overwrite existing output files")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--gold", required=True, help="gold directory")
    p.add_argument("--pred", required=True, help="predictions directory")
    p.add_argument("--report", default="report.json",
                   help="where to write the JSON report")
    p.add_argument("--force", action="store_true",
                   help="overwrite an existing report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("convert", help="convert between BRAT and CoNLL")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--to", choices=("brat", "conll"), required=True)
    p.add_argument("--force", action="store_true",
                   help="overwrite existing output files")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--config", required=True)
    p.add_argument("--port", type=int, default=8570)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--output", default="output")
    p.add_argument("--ui", default=None,
                   help="directory of built UI assets (default: bundled)")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SeqforgeError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except FileExistsError as exc:
        print(f"error[FileExists]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[IOError]: {exc}", file=sys.stderr)
        return 2


def script_main():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
