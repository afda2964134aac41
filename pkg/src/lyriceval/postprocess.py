"""Formatting transforms for transcripts and a lint pass for lyric files."""

from __future__ import annotations

import json
import math
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import regex

from .tokenizer import normalize_punctuation, word_spans

__all__ = [
    "Segment",
    "SegmentFormatError",
    "LintFinding",
    "END_OF_LINE_ALLOWLIST",
    "parse_segments",
    "segments_to_lines",
    "strip_line_end_punctuation",
    "capitalize_lines",
    "swd_normalize",
    "lint_lyrics",
]

END_OF_LINE_ALLOWLIST = frozenset("!?'\"»")
_SWD_REPLACED = frozenset(".;:-")
_COMMA_RUN = regex.compile(r",(?:[ \t]*,)+")
_SPACE_BEFORE_COMMA = regex.compile(r"[ \t]+,")


class SegmentFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    text: str
    start: Optional[float] = None
    end: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.text, str):
            raise SegmentFormatError("segment text must be a string")
        for name in ("start", "end"):
            value = getattr(self, name)
            if value is None:
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SegmentFormatError(f"segment {name} must be a number")
            if not math.isfinite(value) or value < 0:
                raise SegmentFormatError(f"segment {name} must be non-negative")
        if self.start is not None and self.end is not None and self.end < self.start:
            raise SegmentFormatError(f"segment ends before it starts ({self.start} > {self.end})")


def parse_segments(data: Union[str, bytes, list]) -> list[Segment]:
    """Read segments from a JSON array of ``{"text", "start"?, "end"?}`` objects."""
    if isinstance(data, (str, bytes, bytearray)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SegmentFormatError(f"invalid segment JSON: {exc}") from None
    if not isinstance(data, list):
        raise SegmentFormatError("segment JSON must be a top-level array")
    segments = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or "text" not in item:
            raise SegmentFormatError(f"segment {i} must be an object with a 'text' field")
        try:
            segments.append(Segment(item["text"], item.get("start"), item.get("end")))
        except SegmentFormatError as exc:
            raise SegmentFormatError(f"segment {i}: {exc}") from None
    return segments


def segments_to_lines(segments: Iterable[Segment], separator: str = "\n") -> str:
    """One line per non-empty segment."""
    texts = (" ".join(s.text.split()) for s in segments)
    return separator.join(t for t in texts if t)


def _is_word_char(c: str) -> bool:
    return c.isalnum() or unicodedata.category(c).startswith("M")


def _parens_balanced(line: str) -> bool:
    depth = 0
    for c in line:
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def _strip_line(line: str, keep_balanced_parens: bool) -> str:
    line = line.rstrip()
    while line:
        c = line[-1]
        if _is_word_char(c) or c in END_OF_LINE_ALLOWLIST:
            break
        if c == ")" and keep_balanced_parens and _parens_balanced(line):
            break
        line = line[:-1].rstrip()
    return line


def strip_line_end_punctuation(text: str, keep_balanced_parens: bool = True) -> str:
    """Remove trailing non-word characters from every line.

    Letters, digits and ``! ? ' " »`` stop the stripping. A closing
    parenthesis stops it too when the line's parentheses are balanced,
    unless ``keep_balanced_parens`` is off.
    """
    return "\n".join(_strip_line(line, keep_balanced_parens) for line in text.split("\n"))


def _upper(c: str) -> str:
    # Simple (single-codepoint) mapping only; "ß".upper() would give "SS".
    u = c.upper()
    return u if len(u) == 1 else c


def _first_alpha(line: str) -> int:
    for i, c in enumerate(line):
        if c.isalpha():
            return i
    return -1


def _capitalize_line(line: str) -> str:
    i = _first_alpha(line)
    if i < 0:
        return line
    return line[:i] + _upper(line[i]) + line[i + 1 :]


def capitalize_lines(text: str) -> str:
    """Uppercase the first letter of each line, skipping leading punctuation."""
    return "\n".join(_capitalize_line(line) for line in text.split("\n"))


def _commas_for_punct(line: str) -> str:
    inside = bytearray(len(line))
    for start, end in word_spans(line):
        inside[start:end] = b"\x01" * (end - start)
    chars = [
        "," if c in _SWD_REPLACED and not inside[i] else c for i, c in enumerate(line)
    ]
    line = "".join(chars)
    line = _COMMA_RUN.sub(",", line)
    return _SPACE_BEFORE_COMMA.sub(",", line)


def swd_normalize(text: str) -> str:
    """Bring poem-style lyrics in line with the annotation conventions.

    Standalone ``. ; : -`` become commas (hyphens inside words are kept),
    line-final commas are dropped, and every line is capitalized.
    """
    lines = [_commas_for_punct(line) for line in normalize_punctuation(text).split("\n")]
    lines = [line.rstrip(", \t") for line in lines]
    return capitalize_lines("\n".join(lines))


@dataclass(frozen=True)
class LintFinding:
    rule: str
    line: int
    message: str
    severity: str = "warning"

    def as_dict(self) -> dict:
        return {"rule": self.rule, "line": self.line, "message": self.message, "severity": self.severity}


def lint_lyrics(text: str) -> list[LintFinding]:
    """Check the mechanically verifiable formatting rules.

    R2: sections separated by more than one blank line. R4: line starting
    with a lowercase letter. R5: line ending in a comma or period. R9:
    unbalanced parentheses. Line numbers are 1-based.
    """
    text = normalize_punctuation(text)
    if text.endswith("\n"):
        text = text[:-1]
    lines = text.split("\n")
    findings: list[LintFinding] = []

    last_content = max((i for i, line in enumerate(lines) if line), default=-1)
    blank_run = 0
    seen_content = False
    for i, line in enumerate(lines):
        if not line:
            blank_run += 1
            if blank_run == 2 and seen_content and i < last_content:
                findings.append(
                    LintFinding("R2", i, "sections must be separated by a single blank line")
                )
            continue
        blank_run = 0
        seen_content = True
        j = _first_alpha(line)
        if j >= 0 and _upper(line[j]) != line[j]:
            findings.append(LintFinding("R4", i + 1, "line does not start with a capital letter"))
        if line[-1] in ",.":
            findings.append(LintFinding("R5", i + 1, f"line ends with {line[-1]!r}"))

    open_lines: list[int] = []
    for i, line in enumerate(lines):
        for c in line:
            if c == "(":
                open_lines.append(i + 1)
            elif c == ")":
                if open_lines:
                    open_lines.pop()
                else:
                    findings.append(LintFinding("R9", i + 1, "unmatched closing parenthesis"))
    for line_no in open_lines:
        findings.append(LintFinding("R9", line_no, "unclosed parenthesis"))

    findings.sort(key=lambda f: (f.line, f.rule))
    return findings
