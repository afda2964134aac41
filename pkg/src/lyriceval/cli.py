"""Command-line entry point: ``lyriceval --reference DIR --hypothesis DIR``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .corpus import (
    POSTPROCESS_STEPS,
    UNDEFINED,
    ConfigurationError,
    EvalOptions,
    emit_report,
    evaluate_corpus,
    load_corpus,
    write_plot_data,
)

EXIT_OK = 0
EXIT_UNEVALUABLE = 1
EXIT_CONFIG = 2

logger = logging.getLogger("lyriceval")


def _postprocess_steps(value: str) -> tuple[str, ...]:
    steps = tuple(s.strip() for s in value.split(",") if s.strip())
    unknown = [s for s in steps if s not in POSTPROCESS_STEPS]
    if unknown:
        raise argparse.ArgumentTypeError(
            f"unknown step(s) {', '.join(unknown)}; choose from {', '.join(POSTPROCESS_STEPS)}"
        )
    return steps


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lyriceval",
        description="Score lyrics transcriptions: WER, case-sensitive WER and "
        "precision/recall/F1 for punctuation, parentheses, line and section breaks.",
    )
    ap.add_argument("--reference", required=True, type=Path, help="directory of reference .txt files")
    ap.add_argument("--hypothesis", required=True, type=Path, help="directory of transcripts")
    ap.add_argument("--manifest", type=Path, help="CSV: song_id,language,reference_path,hypothesis_path")
    ap.add_argument("--language-filter", metavar="CODE", help="only evaluate songs in this language")
    ap.add_argument(
        "--postprocess",
        type=_postprocess_steps,
        default=(),
        metavar="STEPS",
        help="comma-separated hypothesis transforms: lines,strip,capitalize",
    )
    ap.add_argument(
        "--segments-json",
        action="store_true",
        help="hypotheses are .json segment lists; with 'lines' each segment becomes a line",
    )
    ap.add_argument("--swd", action="store_true", help="apply the poem normalization to references")
    ap.add_argument("--lint", action="store_true", help="attach formatting lint findings to each song")
    ap.add_argument(
        "--strict-parens",
        action="store_true",
        help="strip closing parentheses at line ends like any other punctuation",
    )
    ap.add_argument("--skip-missing", action="store_true", help="exclude songs without a hypothesis")
    ap.add_argument("--per-song", action="store_true", help="print a per-song table to stderr")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    ap.add_argument("--output", "-o", default="-", help="report path (default: stdout)")
    ap.add_argument("--plot-data", type=Path, metavar="DIR", help="write plot-ready CSVs here")
    ap.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes (capped at CPU count)")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def _fmt(value: Optional[float]) -> str:
    return f"{100 * value:6.1f}" if value is not None else f"{UNDEFINED:>6}"


def _print_song_table(run, stream) -> None:
    cols = ["wer", "wer_case", "F_P", "F_B", "F_L", "F_S"]
    print(f"{'song':<40} {'lang':<5} " + " ".join(f"{c:>6}" for c in cols), file=stream)
    for song in run.songs:
        metrics = song.metrics()
        row = " ".join(_fmt(metrics[c]) for c in cols)
        note = "" if song.evaluable else f"  ({song.unevaluable})"
        print(f"{song.song_id:<40} {song.language:<5} {row}{note}", file=stream)


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.parallel < 1:
        print("error: --parallel must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        options = EvalOptions(
            postprocess=args.postprocess,
            segments_json=args.segments_json,
            swd=args.swd,
            lint=args.lint,
            strict_parens=args.strict_parens,
            skip_missing=args.skip_missing,
        )
        manifest = load_corpus(
            args.reference,
            args.hypothesis,
            args.manifest,
            hypothesis_suffix=".json" if args.segments_json else ".txt",
            language_filter=args.language_filter,
        )
        run = evaluate_corpus(manifest, options, parallel=args.parallel)
        report = emit_report(run, args.format)
        if args.output == "-":
            sys.stdout.buffer.write(report)
            sys.stdout.flush()
        else:
            try:
                Path(args.output).write_bytes(report)
            except OSError as exc:
                raise ConfigurationError(f"cannot write {args.output}: {exc}") from None
        if args.plot_data is not None:
            write_plot_data(run, args.plot_data)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.per_song:
        _print_song_table(run, sys.stderr)
    for song in run.unevaluable:
        logger.warning("%s not evaluated: %s", song.song_id, song.unevaluable)
    return EXIT_UNEVALUABLE if run.unevaluable else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
