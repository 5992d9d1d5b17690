"""Command-line interface.

Subcommands: transcribe a single page, run a corpus, evaluate predictions
against labels, build merged ground-truth labels, and summarize page
records. Exit codes: 0 success, 1 partial page failures, 2 config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

from .docmodel import PageRecord, Transcription, flatten, options_size
from .metrics import EvalPair, build_report, options_stats
from .mixed_labels import LabelFormatError, build_mixed_label, parse_iam_ascii
from .pipeline import (
    ConfigError,
    PageError,
    PipelineConfig,
    embedding_model_from_config,
    run_corpus,
    transcribe_page,
    _recognizer_from_dict,
)

CONFIG_ENV_VAR = "TMIXT_CONFIG"

log = logging.getLogger(__name__)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PageError, LabelFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixtext",
        description="Transcribe scanned pages mixing machine-printed and handwritten text.",
    )
    parser.add_argument("--config", help=f"config file (default: ${CONFIG_ENV_VAR})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transcribe", help="transcribe a single page image")
    p.add_argument("image")
    p.add_argument("--out", help="directory for the .txt and .json outputs")
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_transcribe)

    p = sub.add_parser("run", help="transcribe a directory of page images")
    p.add_argument("input_dir")
    p.add_argument("--out", required=True)
    p.add_argument("--labels", help="directory of label .txt files for evaluation")
    p.add_argument("--resume", action="store_true", help="reuse existing page checkpoints")
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_run)

    p = sub.add_parser("evaluate", help="score prediction files against labels")
    p.add_argument("pred_dir")
    p.add_argument("label_dir")
    p.add_argument("--out", help="write the JSON report here")
    _add_config_flags(p)
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("build-labels", help="build merged ground-truth transcriptions")
    p.add_argument("--iam-dir", required=True, help="directory of form .txt files")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_build_labels)

    p = sub.add_parser("report", help="summarize page-record checkpoints")
    p.add_argument("records_dir")
    p.set_defaults(handler=_cmd_report)
    return parser


_FIELD_FLAGS = [
    ("--nomination", "nomination", str),
    ("--pad-pixels", "pad_pixels", int),
    ("--deskew-range", "deskew_range", float),
    ("--deskew-step", "deskew_step", float),
    ("--dictionary-path", "dictionary_path", str),
    ("--frequency-path", "frequency_path", str),
    ("--embedding-path", "embedding_path", str),
    ("--embedding-backend", "embedding_backend", str),
    ("--embedding-dim", "embedding_dim", int),
    ("--parallelism", "parallelism", int),
    ("--timeout", "timeout", float),
    ("--max-edit", "max_edit", int),
]


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    for flag, dest, kind in _FIELD_FLAGS:
        p.add_argument(flag, dest=dest, type=kind, default=None)
    p.add_argument("--rotation-candidates", default=None, help="comma-separated, e.g. 0,180")
    p.add_argument("--enhancement-command", default=None, help="command with {in}/{out} placeholders")
    p.add_argument("--machine-printed", default=None, help="recognizer spec as JSON")
    p.add_argument("--handwritten", default=None, help="recognizer spec as JSON")
    p.add_argument("--no-enhance", action="store_true")
    p.add_argument("--no-deskew", action="store_true")
    p.add_argument("--no-rotate", action="store_true")


def _load_config(args) -> PipelineConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    cfg = PipelineConfig.from_file(path) if path else PipelineConfig()
    overrides = {}
    for _, dest, _ in _FIELD_FLAGS:
        value = getattr(args, dest, None)
        if value is not None:
            overrides[dest] = value
    if getattr(args, "rotation_candidates", None):
        try:
            overrides["rotation_candidates"] = tuple(
                int(a) for a in args.rotation_candidates.split(",")
            )
        except ValueError:
            raise ConfigError(f"bad --rotation-candidates {args.rotation_candidates!r}") from None
    if getattr(args, "enhancement_command", None):
        overrides["enhancement_command"] = tuple(shlex.split(args.enhancement_command))
    for flag in ("machine_printed", "handwritten"):
        raw = getattr(args, flag, None)
        if raw is not None:
            try:
                overrides[flag] = _recognizer_from_dict(json.loads(raw))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"--{flag.replace('_', '-')} is not valid JSON: {exc}") from None
    if getattr(args, "no_enhance", False):
        overrides["enhance"] = False
    if getattr(args, "no_deskew", False):
        overrides["deskew"] = False
    if getattr(args, "no_rotate", False):
        overrides["rotate_select"] = False
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def _cmd_transcribe(args) -> int:
    cfg = _load_config(args)
    record = transcribe_page(args.image, cfg)
    assert record.final is not None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{record.source_id}.txt").write_text(record.final.to_text(), encoding="utf-8")
        (out / f"{record.source_id}.json").write_text(record.to_json(), encoding="utf-8")
    sys.stdout.write(record.final.to_text())
    return 0


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    result = run_corpus(args.input_dir, cfg, args.out, args.labels, args.resume)
    print(f"pages: {len(result.pages)} ok, {len(result.failures)} failed")
    for stem, message in sorted(result.failures.items()):
        print(f"  {stem}: {message}", file=sys.stderr)
    if result.report is not None:
        print(result.report.render_text(), end="")
    return 1 if result.failures else 0


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    model = embedding_model_from_config(cfg)
    label_dir = Path(args.label_dir)
    pairs = []
    for pred_path in sorted(Path(args.pred_dir).glob("*.txt")):
        label_path = label_dir / pred_path.name
        if not label_path.exists():
            log.warning("no label for %s; skipping", pred_path.stem)
            continue
        pred = Transcription.from_text(pred_path.read_text(encoding="utf-8"), pred_path.stem)
        target = Transcription.from_text(label_path.read_text(encoding="utf-8"), pred_path.stem)
        pairs.append(EvalPair(pred_path.stem, tuple(flatten(pred)), tuple(flatten(target))))
    report = build_report(pairs, model)
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
    print(report.render_text(), end="")
    return 0


def _cmd_build_labels(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failures = 0
    for form_path in sorted(Path(args.iam_dir).glob("*.txt")):
        try:
            printed, handwritten = parse_iam_ascii(form_path.read_text(encoding="utf-8"))
        except LabelFormatError as exc:
            print(f"{form_path.name}: {exc}", file=sys.stderr)
            failures += 1
            continue
        label = build_mixed_label(printed, handwritten, form_path.stem)
        (out / form_path.name).write_text(label.to_text(), encoding="utf-8")
        handwritten_tokens = sum(len(line) for line in handwritten)
        sidecar = {
            "source_id": form_path.stem,
            "printed_tokens": label.word_count() - handwritten_tokens,
            "handwritten_tokens": handwritten_tokens,
            "total_tokens": label.word_count(),
        }
        (out / f"{form_path.stem}.json").write_text(
            json.dumps(sidecar, indent=2), encoding="utf-8"
        )
    return 1 if failures else 0


def _cmd_report(args) -> int:
    records = []
    for record_path in sorted(Path(args.records_dir).glob("*.json")):
        if record_path.name == "report.json":
            continue
        records.append(PageRecord.from_json(record_path.read_text(encoding="utf-8")))
    frac1, frac3, frac4 = options_stats(records)
    sizes = Counter()
    for record in records:
        for options in record.options.values():
            sizes[options_size(options)] += 1
    print(f"pages: {len(records)}")
    print(f"words: {sum(sizes.values())}")
    print(
        "options sizes: "
        f"1 -> {sizes[1]} ({frac1:.1%}), 3 -> {sizes[3]} ({frac3:.1%}), 4 -> {sizes[4]} ({frac4:.1%})"
    )
    flagged = [r.source_id for r in records if not r.word_boxes]
    if flagged:
        print("pages with no words: " + ", ".join(sorted(flagged)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
