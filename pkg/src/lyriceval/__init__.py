"""Readability-aware evaluation of lyrics transcriptions."""

__version__ = "0.1.0"

from .alignment import EditKind, EditOp, EditScript, align, char_distance
from .metrics import (
    ConfusionMatrix,
    SongReport,
    TypeCounts,
    UndefinedMetricError,
    aggregate,
    case_sensitive_wer,
    classify_near_hit,
    compare,
    precision_recall_f,
    word_error_rate,
)
from .tokenizer import Token, TokenSequence, TokenType, normalize_punctuation, strip_nonwords, tokenize

__all__ = [
    "EditKind",
    "EditOp",
    "EditScript",
    "align",
    "char_distance",
    "ConfusionMatrix",
    "SongReport",
    "TypeCounts",
    "UndefinedMetricError",
    "aggregate",
    "case_sensitive_wer",
    "classify_near_hit",
    "compare",
    "precision_recall_f",
    "word_error_rate",
    "Token",
    "TokenSequence",
    "TokenType",
    "normalize_punctuation",
    "strip_nonwords",
    "tokenize",
]
