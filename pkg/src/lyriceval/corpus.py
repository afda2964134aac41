"""Corpus loading, per-song evaluation and report serialization."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from . import __version__
from .metrics import (
    NONWORD_TYPES,
    ConfusionMatrix,
    SongReport,
    Summary,
    TypeCounts,
    WordOpCounts,
    aggregate,
    aggregate_by_language,
    compare,
)
from .postprocess import (
    SegmentFormatError,
    capitalize_lines,
    lint_lyrics,
    parse_segments,
    segments_to_lines,
    strip_line_end_punctuation,
    swd_normalize,
)
from .tokenizer import InputEncodingError, decode_utf8, normalize_punctuation, tokenize

logger = logging.getLogger(__name__)

__all__ = [
    "ConfigurationError",
    "ManifestEntry",
    "CorpusManifest",
    "EvalOptions",
    "EvaluationRun",
    "POSTPROCESS_STEPS",
    "load_corpus",
    "evaluate_song",
    "evaluate_corpus",
    "emit_report",
    "write_plot_data",
]

POSTPROCESS_STEPS = ("lines", "strip", "capitalize")
_LANGUAGE_DIR = re.compile(r"^[a-z]{2,3}(?:[-_][A-Za-z0-9]{2,8})*$")
UNDEFINED = "—"


class ConfigurationError(Exception):
    """Bad paths, manifests or options; the CLI exits with status 2."""


@dataclass(frozen=True)
class ManifestEntry:
    song_id: str
    language: str
    reference_path: Path
    hypothesis_path: Optional[Path]

    @property
    def missing_hypothesis(self) -> bool:
        return self.hypothesis_path is None


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry]
    # Hypothesis files with no matching reference; reported, never scored.
    orphan_hypotheses: list[Path] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def missing(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.missing_hypothesis]


def _language_of(rel: Path) -> str:
    if len(rel.parts) > 1 and _LANGUAGE_DIR.match(rel.parts[0]):
        return rel.parts[0]
    return "und"


def _scan(root: Path, suffix: str) -> dict[str, Path]:
    found = {}
    for path in sorted(root.rglob(f"*{suffix}")):
        if path.is_file():
            found[path.relative_to(root).with_suffix("").as_posix()] = path
    return found


def _check_readable(path: Path) -> None:
    if not path.is_file() or not os.access(path, os.R_OK):
        raise ConfigurationError(f"cannot read {path}")


def _load_manifest(path: Path, reference_root: Path, hypothesis_root: Path) -> CorpusManifest:
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
    except OSError as exc:
        raise ConfigurationError(f"cannot read manifest {path}: {exc}") from None
    required = {"song_id", "language", "reference_path", "hypothesis_path"}
    if rows and not required <= set(rows[0]):
        raise ConfigurationError(f"manifest {path} needs columns {sorted(required)}")
    entries = []
    seen = set()
    for row in rows:
        song_id = row["song_id"].strip()
        if song_id in seen:
            raise ConfigurationError(f"duplicate song_id {song_id!r} in {path}")
        seen.add(song_id)
        ref = reference_root / row["reference_path"].strip()
        _check_readable(ref)
        hyp: Optional[Path] = None
        if row["hypothesis_path"].strip():
            hyp = hypothesis_root / row["hypothesis_path"].strip()
            if not hyp.exists():
                hyp = None
            else:
                _check_readable(hyp)
        entries.append(ManifestEntry(song_id, row["language"].strip() or "und", ref, hyp))
    return CorpusManifest(entries)


def load_corpus(
    reference_root,
    hypothesis_root,
    manifest=None,
    *,
    hypothesis_suffix: str = ".txt",
    language_filter: Optional[str] = None,
) -> CorpusManifest:
    """Pair reference and hypothesis files.

    Without a manifest, files are paired by relative path; the language is
    the first directory component when it looks like a language code,
    otherwise ``"und"``. References without a hypothesis are kept and
    flagged; hypotheses without a reference are listed as orphans.
    """
    reference_root = Path(reference_root)
    hypothesis_root = Path(hypothesis_root)
    for root in (reference_root, hypothesis_root):
        if not root.is_dir():
            raise ConfigurationError(f"not a directory: {root}")

    if manifest is not None:
        corpus = _load_manifest(Path(manifest), reference_root, hypothesis_root)
    else:
        refs = _scan(reference_root, ".txt")
        hyps = _scan(hypothesis_root, hypothesis_suffix)
        entries = []
        for song_id, ref in refs.items():
            _check_readable(ref)
            hyp = hyps.get(song_id)
            if hyp is not None:
                _check_readable(hyp)
            entries.append(ManifestEntry(song_id, _language_of(Path(song_id)), ref, hyp))
        orphans = [hyps[k] for k in sorted(set(hyps) - set(refs))]
        corpus = CorpusManifest(entries, orphans)

    if language_filter:
        corpus.entries = [e for e in corpus.entries if e.language == language_filter]
    if not corpus.entries:
        raise ConfigurationError(
            f"no pairs found under {reference_root} and {hypothesis_root}"
        )
    for entry in corpus.missing():
        logger.warning("no hypothesis for %s; scoring it as empty", entry.song_id)
    for path in corpus.orphan_hypotheses:
        logger.warning("hypothesis %s has no reference", path)
    return corpus


@dataclass(frozen=True)
class EvalOptions:
    postprocess: tuple[str, ...] = ()
    segments_json: bool = False
    swd: bool = False
    lint: bool = False
    strict_parens: bool = False
    skip_missing: bool = False

    def __post_init__(self):
        unknown = set(self.postprocess) - set(POSTPROCESS_STEPS)
        if unknown:
            raise ConfigurationError(f"unknown post-processing steps: {sorted(unknown)}")


def prepare_hypothesis(raw: str, options: EvalOptions) -> str:
    """Apply the configured hypothesis transforms; strip runs before capitalize."""
    if options.segments_json:
        separator = "\n" if "lines" in options.postprocess else " "
        text = segments_to_lines(parse_segments(raw), separator)
    else:
        text = raw
    text = normalize_punctuation(text)
    if "strip" in options.postprocess:
        text = strip_line_end_punctuation(text, keep_balanced_parens=not options.strict_parens)
    if "capitalize" in options.postprocess:
        text = capitalize_lines(text)
    return text


def evaluate_song(
    reference_text: str,
    hypothesis_text: str,
    options: EvalOptions = EvalOptions(),
    song_id: str = "",
    language: str = "und",
) -> SongReport:
    """Score one transcript against its reference.

    A reference without any word tokens yields a report marked unevaluable.
    """
    reference_text = normalize_punctuation(reference_text)
    if options.swd:
        reference_text = swd_normalize(reference_text)
    hypothesis_text = prepare_hypothesis(hypothesis_text, options)
    reference = tokenize(reference_text)
    hypothesis = tokenize(hypothesis_text)
    report = compare(reference, hypothesis, song_id, language)
    if report.counts.N == 0:
        report.unevaluable = "reference contains no words"
    if options.lint:
        report.lint = {
            "reference": [f.as_dict() for f in lint_lyrics(reference_text)],
            "hypothesis": [f.as_dict() for f in lint_lyrics(hypothesis_text)],
        }
    return report


def _read_text(path: Path) -> str:
    data = path.read_bytes()
    return normalize_punctuation(data)


def _evaluate_entry(entry: ManifestEntry, options: EvalOptions) -> SongReport:
    try:
        reference_text = _read_text(entry.reference_path)
        if entry.hypothesis_path is None:
            hypothesis_text = "[]" if options.segments_json else ""
        elif options.segments_json:
            hypothesis_text = decode_utf8(entry.hypothesis_path.read_bytes())
        else:
            hypothesis_text = _read_text(entry.hypothesis_path)
        report = evaluate_song(
            reference_text, hypothesis_text, options, entry.song_id, entry.language
        )
    except (InputEncodingError, SegmentFormatError) as exc:
        report = SongReport(entry.song_id, entry.language, unevaluable=str(exc))
    report.missing_hypothesis = entry.missing_hypothesis
    return report


def _evaluate_entries(args):
    entries, options = args
    return [_evaluate_entry(e, options) for e in entries]


@dataclass
class EvaluationRun:
    manifest: CorpusManifest
    options: EvalOptions
    songs: list[SongReport]
    by_language: dict[str, Summary]
    overall: Optional[Summary]
    version: str = __version__
    timestamp: str = ""

    @property
    def unevaluable(self) -> list[SongReport]:
        return [s for s in self.songs if not s.evaluable]


def _workers(parallel: int) -> int:
    return max(1, min(parallel, os.cpu_count() or 1))


def evaluate_corpus(
    manifest: CorpusManifest, options: EvalOptions = EvalOptions(), parallel: int = 1
) -> EvaluationRun:
    """Evaluate every song, then fold the reports into corpus summaries.

    ``parallel`` is an upper bound; no more worker processes are started
    than there are CPUs.
    """
    entries = manifest.entries
    if options.skip_missing:
        entries = [e for e in entries if not e.missing_hypothesis]
    workers = _workers(parallel)
    songs: list[SongReport] = []
    if workers == 1 or len(entries) < 2:
        songs = [_evaluate_entry(e, options) for e in entries]
    else:
        chunks = [entries[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            for batch in pool.map(_evaluate_entries, [(c, options) for c in chunks]):
                songs.extend(batch)
    songs.sort(key=lambda s: s.song_id)
    evaluable = [s for s in songs if s.evaluable]
    return EvaluationRun(
        manifest=manifest,
        options=options,
        songs=songs,
        by_language=aggregate_by_language(evaluable),
        overall=aggregate(evaluable) if evaluable else None,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def _summary_dict(summary: Summary) -> dict:
    freqs = summary.word_ops.frequencies().as_dict() if summary.word_ops.N else None
    return {
        "songs": summary.songs,
        "metrics": summary.metrics(),
        "counts": summary.counts.as_dict(),
        "word_ops": summary.word_ops.as_dict(),
        "word_op_frequencies": freqs,
        "confusion": summary.confusion.as_dict(),
    }


def _song_dict(song: SongReport) -> dict:
    freqs = song.word_ops.frequencies().as_dict() if song.word_ops.N else None
    out = {
        "song_id": song.song_id,
        "language": song.language,
        "status": "ok" if song.evaluable else "unevaluable",
        "reason": song.unevaluable,
        "missing_hypothesis": song.missing_hypothesis,
        "metrics": song.metrics(),
        "counts": song.counts.as_dict(),
        "word_ops": song.word_ops.as_dict(),
        "word_op_frequencies": freqs,
        "confusion": song.confusion.as_dict(),
    }
    if song.lint is not None:
        out["lint"] = song.lint
    return out


def report_dict(run: EvaluationRun) -> dict:
    options = asdict(run.options)
    options["postprocess"] = list(run.options.postprocess)
    return {
        "version": run.version,
        "timestamp": run.timestamp,
        "aggregation": "micro",
        "options": options,
        "songs": [_song_dict(s) for s in run.songs],
        "by_language": {lang: _summary_dict(s) for lang, s in run.by_language.items()},
        "overall": _summary_dict(run.overall) if run.overall is not None else None,
        "orphan_hypotheses": [str(p) for p in run.manifest.orphan_hypotheses],
    }


CSV_METRICS = ["wer", "wer_case"] + [
    f"{m}_{t.value}" for t in NONWORD_TYPES for m in ("P", "R", "F")
]


def _pct(value: Optional[float]) -> str:
    return UNDEFINED if value is None else f"{100 * value:.1f}"


def emit_report(run: EvaluationRun, fmt: str = "json") -> bytes:
    """Serialize a run as JSON (full precision, null for undefined) or CSV."""
    if fmt == "json":
        text = json.dumps(report_dict(run), indent=2, sort_keys=True, ensure_ascii=False)
        return (text + "\n").encode("utf-8")
    if fmt != "csv":
        raise ConfigurationError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scope", "song_id", "language", "status"] + CSV_METRICS)
    for song in run.songs:
        metrics = song.metrics()
        status = "ok" if song.evaluable else "unevaluable"
        writer.writerow(
            ["song", song.song_id, song.language, status] + [_pct(metrics[k]) for k in CSV_METRICS]
        )
    for lang, summary in run.by_language.items():
        metrics = summary.metrics()
        writer.writerow(["language", "", lang, "ok"] + [_pct(metrics[k]) for k in CSV_METRICS])
    if run.overall is not None:
        metrics = run.overall.metrics()
        writer.writerow(["overall", "", "all", "ok"] + [_pct(metrics[k]) for k in CSV_METRICS])
    return buf.getvalue().encode("utf-8")


def write_plot_data(run: EvaluationRun, directory) -> list[Path]:
    """Write CSVs for song-level WER, word-op stacks and confusion grids."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create {directory}: {exc}") from None
    written = []

    path = directory / "song_wer.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["song_id", "language", "wer", "wer_case"])
        for s in run.songs:
            if s.evaluable:
                w.writerow([s.song_id, s.language, repr(s.wer), repr(s.wer_case)])
    written.append(path)

    groups: list[tuple[str, Summary]] = list(run.by_language.items())
    if run.overall is not None:
        groups.append(("all", run.overall))

    path = directory / "word_ops.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["group", "hit", "case", "near", "sub", "ins", "del"])
        for name, summary in groups:
            if summary.word_ops.N:
                freqs = summary.word_ops.frequencies().as_dict()
                w.writerow([name] + [repr(freqs[k]) for k in ("hit", "case", "near", "sub", "ins", "del")])
    written.append(path)

    path = directory / "confusion.csv"
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["group", "reference", "prediction", "count"])
        for name, summary in groups:
            for ref_label, row in summary.confusion.as_dict().items():
                for hyp_label, count in row.items():
                    w.writerow([name, ref_label, hyp_label, count])
    written.append(path)
    return written


def summary_from_dict(data: dict) -> tuple[TypeCounts, WordOpCounts, ConfusionMatrix]:
    """Counts embedded in a serialized song or summary entry."""
    return (
        TypeCounts.from_dict(data["counts"]),
        WordOpCounts.from_dict(data["word_ops"]),
        ConfusionMatrix.from_dict(data["confusion"]),
    )
