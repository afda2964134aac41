"""Error counts and metrics computed from edit scripts."""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .alignment import EditKind, EditScript, align, char_distance
from .tokenizer import Token, TokenSequence, TokenType, strip_nonwords

__all__ = [
    "UndefinedMetricError",
    "OpCounts",
    "TypeCounts",
    "PRF",
    "WordOpCounts",
    "WordOpFrequencies",
    "ConfusionMatrix",
    "SongReport",
    "Summary",
    "NONWORD_TYPES",
    "count_type_edits",
    "count_word_edits",
    "word_error_rate",
    "case_sensitive_wer",
    "precision_recall_f",
    "classify_near_hit",
    "count_word_ops",
    "word_op_frequencies",
    "confusion_matrix",
    "compare",
    "aggregate",
    "aggregate_by_language",
]

NONWORD_TYPES = (
    TokenType.PUNCT,
    TokenType.PAREN,
    TokenType.LINE_BREAK,
    TokenType.SECTION_BREAK,
)

_MATCH_KEY = operator.attrgetter("match_key")
_APOSTROPHES = str.maketrans("", "", "'\u2019\u02bc")


class UndefinedMetricError(ValueError):
    """A ratio metric was requested with an empty denominator."""


@dataclass
class OpCounts:
    hits: int = 0
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0

    @property
    def ref_total(self) -> int:
        return self.hits + self.substitutions + self.deletions

    @property
    def hyp_total(self) -> int:
        return self.hits + self.substitutions + self.insertions

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "OpCounts") -> "OpCounts":
        return OpCounts(
            self.hits + other.hits,
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
        )

    def as_dict(self) -> dict[str, int]:
        return {
            "hits": self.hits,
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
        }


def _empty_by_type() -> dict[TokenType, OpCounts]:
    return {t: OpCounts() for t in TokenType}


@dataclass
class TypeCounts:
    """Tallies for one song or a whole corpus.

    ``by_type`` comes from the alignment over all tokens and drives the
    per-type precision/recall. ``words`` and ``case_errors`` come from the
    word-only alignment and drive both WER variants.
    """

    by_type: dict[TokenType, OpCounts] = field(default_factory=_empty_by_type)
    words: OpCounts = field(default_factory=OpCounts)
    case_errors: int = 0

    @property
    def N(self) -> int:
        return self.words.ref_total

    def __getitem__(self, kind: TokenType) -> OpCounts:
        return self.by_type[kind]

    def __add__(self, other: "TypeCounts") -> "TypeCounts":
        return TypeCounts(
            {t: self.by_type[t] + other.by_type[t] for t in TokenType},
            self.words + other.words,
            self.case_errors + other.case_errors,
        )

    def as_dict(self) -> dict:
        return {
            "by_type": {t.name: self.by_type[t].as_dict() for t in TokenType},
            "words": self.words.as_dict(),
            "case_errors": self.case_errors,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TypeCounts":
        return cls(
            {t: OpCounts(**data["by_type"][t.name]) for t in TokenType},
            OpCounts(**data["words"]),
            data["case_errors"],
        )


def count_word_edits(
    script: EditScript, reference: Sequence[Token], hypothesis: Sequence[Token]
) -> tuple[OpCounts, int]:
    """Word-level op counts and case errors from a word-only alignment."""
    counts = OpCounts()
    case_errors = 0
    for op in script.ops:
        if op.kind is EditKind.HIT:
            counts.hits += 1
            if reference[op.ref_index].original != hypothesis[op.hyp_index].original:
                case_errors += 1
        elif op.kind is EditKind.SUBSTITUTION:
            counts.substitutions += 1
        elif op.kind is EditKind.DELETION:
            counts.deletions += 1
        else:
            counts.insertions += 1
    return counts, case_errors


def count_type_edits(
    script: EditScript,
    reference: Sequence[Token],
    hypothesis: Sequence[Token],
    word_script: Optional[EditScript] = None,
) -> TypeCounts:
    """Attribute each edit of a typed alignment to a token type.

    A substitution between two different types counts as a deletion of the
    reference type plus an insertion of the hypothesis type. The word-level
    fields are taken from ``word_script`` (aligned over the word tokens of
    the same sequences) when given, otherwise from the WORD tokens of
    ``script`` itself.
    """
    by_type = _empty_by_type()
    for op in script.ops:
        kind = op.kind
        if kind is EditKind.DELETION:
            by_type[reference[op.ref_index].kind].deletions += 1
        elif kind is EditKind.INSERTION:
            by_type[hypothesis[op.hyp_index].kind].insertions += 1
        else:
            ref_type = reference[op.ref_index].kind
            hyp_type = hypothesis[op.hyp_index].kind
            if ref_type is not hyp_type:
                by_type[ref_type].deletions += 1
                by_type[hyp_type].insertions += 1
            elif kind is EditKind.HIT:
                by_type[ref_type].hits += 1
            else:
                by_type[ref_type].substitutions += 1

    if word_script is None:
        words = OpCounts(**by_type[TokenType.WORD].as_dict())
        case_errors = sum(
            1
            for op in script.ops
            if op.kind is EditKind.HIT
            and reference[op.ref_index].kind is TokenType.WORD
            and reference[op.ref_index].original != hypothesis[op.hyp_index].original
        )
    else:
        words, case_errors = count_word_edits(
            word_script, strip_nonwords(reference), strip_nonwords(hypothesis)
        )
    return TypeCounts(by_type, words, case_errors)


def word_error_rate(counts: TypeCounts) -> float:
    """(S + D + I) / N over the word-only alignment. May exceed 1."""
    if counts.N == 0:
        raise UndefinedMetricError("WER is undefined for an empty reference")
    return counts.words.errors / counts.N


def case_sensitive_wer(counts: TypeCounts) -> float:
    if counts.N == 0:
        raise UndefinedMetricError("WER' is undefined for an empty reference")
    return (counts.words.errors + counts.case_errors) / counts.N


class PRF(NamedTuple):
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]


def precision_recall_f(counts: TypeCounts, kind: TokenType) -> PRF:
    """Precision, recall and F1 for one token type; ``None`` when undefined.

    Precision is undefined when nothing of that type was predicted, recall
    when nothing was expected, and F1 when either of them is.
    """
    c = counts.by_type[kind]
    predicted = c.hyp_total
    expected = c.ref_total
    p = c.hits / predicted if predicted else None
    r = c.hits / expected if expected else None
    # Harmonic mean of p and r, written in counts; 0 when there are no hits.
    f = 2 * c.hits / (predicted + expected) if p is not None and r is not None else None
    return PRF(p, r, f)


def classify_near_hit(ref_word: str, hyp_word: str) -> bool:
    """Whether a word substitution is only a small spelling difference.

    Apostrophes are dropped first; the words then need a character edit
    distance of at most 2 that is also below half the longer word's length.
    """
    a = ref_word.translate(_APOSTROPHES)
    b = hyp_word.translate(_APOSTROPHES)
    dist = char_distance(a, b)
    return dist <= 2 and 2 * dist < max(len(a), len(b))


@dataclass
class WordOpCounts:
    hit: int = 0
    case: int = 0
    near: int = 0
    sub: int = 0
    ins: int = 0
    del_: int = 0

    @property
    def N(self) -> int:
        return self.hit + self.case + self.near + self.sub + self.del_

    def __add__(self, other: "WordOpCounts") -> "WordOpCounts":
        return WordOpCounts(
            self.hit + other.hit,
            self.case + other.case,
            self.near + other.near,
            self.sub + other.sub,
            self.ins + other.ins,
            self.del_ + other.del_,
        )

    def as_dict(self) -> dict[str, int]:
        return {
            "hit": self.hit,
            "case": self.case,
            "near": self.near,
            "sub": self.sub,
            "ins": self.ins,
            "del": self.del_,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WordOpCounts":
        return cls(data["hit"], data["case"], data["near"], data["sub"], data["ins"], data["del"])

    def frequencies(self) -> "WordOpFrequencies":
        n = self.N
        if n == 0:
            raise UndefinedMetricError("operation frequencies need a non-empty reference")
        return WordOpFrequencies(*(Fraction(v, n) for v in self.as_dict().values()))


class WordOpFrequencies(NamedTuple):
    """Word edit operations as exact fractions of the reference length."""

    hit: Fraction
    case: Fraction
    near: Fraction
    sub: Fraction
    ins: Fraction
    del_: Fraction

    def as_dict(self) -> dict[str, float]:
        return {
            "hit": float(self.hit),
            "case": float(self.case),
            "near": float(self.near),
            "sub": float(self.sub),
            "ins": float(self.ins),
            "del": float(self.del_),
        }


def count_word_ops(
    script: EditScript, reference: Sequence[Token], hypothesis: Sequence[Token]
) -> WordOpCounts:
    out = WordOpCounts()
    for op in script.ops:
        if op.kind is EditKind.HIT:
            if reference[op.ref_index].original == hypothesis[op.hyp_index].original:
                out.hit += 1
            else:
                out.case += 1
        elif op.kind is EditKind.SUBSTITUTION:
            r = reference[op.ref_index].folded
            h = hypothesis[op.hyp_index].folded
            if classify_near_hit(r, h):
                out.near += 1
            else:
                out.sub += 1
        elif op.kind is EditKind.INSERTION:
            out.ins += 1
        else:
            out.del_ += 1
    return out


def word_op_frequencies(
    script: EditScript, reference: Sequence[Token], hypothesis: Sequence[Token]
) -> WordOpFrequencies:
    """Split the word-only alignment into hit/case/near/sub/ins/del shares."""
    return count_word_ops(script, reference, hypothesis).frequencies()


_LABELS = NONWORD_TYPES + (None,)
_LABEL_INDEX = {label: i for i, label in enumerate(_LABELS)}
_LABEL_NAMES = [t.name for t in NONWORD_TYPES] + ["NONE"]


class ConfusionMatrix:
    """Counts over (reference type, predicted type) for non-word tokens.

    ``None`` stands for the absence of a token: row ``None`` holds
    insertions, column ``None`` deletions.
    """

    labels = _LABELS

    def __init__(self, counts: Optional[np.ndarray] = None):
        size = len(_LABELS)
        self.counts = np.zeros((size, size), np.int64) if counts is None else counts

    def add(self, ref_label: Optional[TokenType], hyp_label: Optional[TokenType]) -> None:
        self.counts[_LABEL_INDEX[ref_label], _LABEL_INDEX[hyp_label]] += 1

    def __getitem__(self, cell: tuple[Optional[TokenType], Optional[TokenType]]) -> int:
        ref_label, hyp_label = cell
        return int(self.counts[_LABEL_INDEX[ref_label], _LABEL_INDEX[hyp_label]])

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def row_sum(self, label: Optional[TokenType]) -> int:
        return int(self.counts[_LABEL_INDEX[label]].sum())

    def col_sum(self, label: Optional[TokenType]) -> int:
        return int(self.counts[:, _LABEL_INDEX[label]].sum())

    def as_dict(self) -> dict[str, dict[str, int]]:
        return {
            _LABEL_NAMES[i]: {_LABEL_NAMES[j]: int(self.counts[i, j]) for j in range(len(_LABELS))}
            for i in range(len(_LABELS))
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConfusionMatrix":
        counts = np.array(
            [[data[r][c] for c in _LABEL_NAMES] for r in _LABEL_NAMES], dtype=np.int64
        )
        return cls(counts)


def confusion_matrix(
    script: EditScript, reference: Sequence[Token], hypothesis: Sequence[Token]
) -> ConfusionMatrix:
    """Non-word confusion counts from a typed alignment.

    Word tokens are treated as absent: a punctuation mark substituted by a
    word lands in the deletion column, a word replaced by a line break in
    the insertion row; word-word pairs are skipped.
    """
    cm = ConfusionMatrix()
    for op in script.ops:
        ref_label = hyp_label = None
        if op.ref_index is not None:
            kind = reference[op.ref_index].kind
            ref_label = None if kind is TokenType.WORD else kind
        if op.hyp_index is not None:
            kind = hypothesis[op.hyp_index].kind
            hyp_label = None if kind is TokenType.WORD else kind
        if ref_label is None and hyp_label is None:
            continue
        cm.add(ref_label, hyp_label)
    return cm


def _metrics(counts: TypeCounts) -> dict[str, Optional[float]]:
    out: dict[str, Optional[float]] = {}
    if counts.N:
        out["wer"] = word_error_rate(counts)
        out["wer_case"] = case_sensitive_wer(counts)
    else:
        out["wer"] = out["wer_case"] = None
    for kind in NONWORD_TYPES:
        p, r, f = precision_recall_f(counts, kind)
        key = kind.value
        out[f"P_{key}"], out[f"R_{key}"], out[f"F_{key}"] = p, r, f
    return out


@dataclass
class SongReport:
    song_id: str
    language: str
    counts: TypeCounts = field(default_factory=TypeCounts)
    word_ops: WordOpCounts = field(default_factory=WordOpCounts)
    confusion: ConfusionMatrix = field(default_factory=ConfusionMatrix)
    unevaluable: Optional[str] = None
    missing_hypothesis: bool = False
    lint: Optional[dict] = None

    @property
    def evaluable(self) -> bool:
        return self.unevaluable is None

    @property
    def wer(self) -> Optional[float]:
        return word_error_rate(self.counts) if self.counts.N else None

    @property
    def wer_case(self) -> Optional[float]:
        return case_sensitive_wer(self.counts) if self.counts.N else None

    def prf(self, kind: TokenType) -> PRF:
        return precision_recall_f(self.counts, kind)

    @property
    def frequencies(self) -> Optional[WordOpFrequencies]:
        return self.word_ops.frequencies() if self.word_ops.N else None

    def metrics(self) -> dict[str, Optional[float]]:
        return _metrics(self.counts)


@dataclass
class Summary:
    """Micro-aggregated counts and metrics over a group of songs."""

    songs: int
    counts: TypeCounts
    word_ops: WordOpCounts
    confusion: ConfusionMatrix

    @property
    def wer(self) -> float:
        return word_error_rate(self.counts)

    @property
    def wer_case(self) -> float:
        return case_sensitive_wer(self.counts)

    def prf(self, kind: TokenType) -> PRF:
        return precision_recall_f(self.counts, kind)

    @property
    def frequencies(self) -> WordOpFrequencies:
        return self.word_ops.frequencies()

    def metrics(self) -> dict[str, Optional[float]]:
        return _metrics(self.counts)


def compare(
    reference: TokenSequence,
    hypothesis: TokenSequence,
    song_id: str = "",
    language: str = "und",
) -> SongReport:
    """Run both alignments over two token sequences and collect all counts."""
    ref_words = strip_nonwords(reference).tokens
    hyp_words = strip_nonwords(hypothesis).tokens
    reference, hypothesis = tuple(reference), tuple(hypothesis)
    word_script = align(ref_words, hyp_words, key=_MATCH_KEY)
    typed_script = align(reference, hypothesis, key=_MATCH_KEY)
    words, case_errors = count_word_edits(word_script, ref_words, hyp_words)
    counts = count_type_edits(typed_script, reference, hypothesis)
    counts.words, counts.case_errors = words, case_errors
    return SongReport(
        song_id=song_id,
        language=language,
        counts=counts,
        word_ops=count_word_ops(word_script, ref_words, hyp_words),
        confusion=confusion_matrix(typed_script, reference, hypothesis),
    )


def aggregate(reports: Iterable[SongReport]) -> Summary:
    """Sum counts over evaluable songs; metrics are recomputed from the sums."""
    reports = [r for r in reports if r.evaluable]
    if not reports:
        raise UndefinedMetricError("cannot aggregate an empty set of reports")
    counts = TypeCounts()
    word_ops = WordOpCounts()
    confusion = ConfusionMatrix()
    for r in reports:
        counts = counts + r.counts
        word_ops = word_ops + r.word_ops
        confusion = confusion + r.confusion
    return Summary(len(reports), counts, word_ops, confusion)


def aggregate_by_language(reports: Iterable[SongReport]) -> dict[str, Summary]:
    groups: dict[str, list[SongReport]] = {}
    for r in reports:
        if r.evaluable:
            groups.setdefault(r.language, []).append(r)
    return {lang: aggregate(group) for lang, group in sorted(groups.items())}
