"""Punctuation normalization and typed tokenization of lyric text."""

from __future__ import annotations

import enum
import hashlib
import unicodedata
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence, Union, overload

import regex

__all__ = [
    "InputEncodingError",
    "TokenType",
    "Token",
    "TokenSequence",
    "LINE_BREAK_TEXT",
    "SECTION_BREAK_TEXT",
    "decode_utf8",
    "normalize_punctuation",
    "tokenize",
    "strip_nonwords",
    "word_spans",
]


class InputEncodingError(ValueError):
    """Raised when input bytes are not valid UTF-8."""

    def __init__(self, offset: int, reason: str = "invalid UTF-8"):
        self.offset = offset
        super().__init__(f"{reason} at byte offset {offset}")


class TokenType(enum.Enum):
    WORD = "W"
    PUNCT = "P"
    PAREN = "B"
    LINE_BREAK = "L"
    SECTION_BREAK = "S"

    @property
    def is_break(self) -> bool:
        return self in (TokenType.LINE_BREAK, TokenType.SECTION_BREAK)


# Whitespace never survives tokenization, so these can't collide with real tokens.
LINE_BREAK_TEXT = "\n"
SECTION_BREAK_TEXT = "\n\n"


class _TokenFields(NamedTuple):
    original: str
    kind: TokenType
    line_index: int
    char_offset: int
    folded: str
    match_key: str


class Token(_TokenFields):
    """One lexical unit.

    ``folded`` is the case-folded form for words and equals ``original``
    otherwise. ``match_key`` decides hits during alignment: words compare
    case-folded, punctuation and parentheses by exact codepoint, break
    tokens only by kind.
    """

    __slots__ = ()

    def __new__(cls, original: str, kind: TokenType, line_index: int = 0, char_offset: int = 0):
        # Keys are the one-letter type code followed by the compared text.
        if kind is TokenType.WORD:
            folded = original.casefold()
            key = "W" + folded
        else:
            folded = original
            key = kind.value if kind.is_break else kind.value + original
        return super().__new__(cls, original, kind, line_index, char_offset, folded, key)

    def __getnewargs__(self):
        return (self.original, self.kind, self.line_index, self.char_offset)

    def __repr__(self) -> str:
        if self.kind.is_break:
            return f"<{self.kind.name}>"
        return f"{self.kind.value}:{self.original!r}"


@dataclass(frozen=True)
class TokenSequence(Sequence[Token]):
    tokens: tuple[Token, ...] = ()
    source_hash: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @overload
    def __getitem__(self, index: int) -> Token: ...

    @overload
    def __getitem__(self, index: slice) -> "TokenSequence": ...

    def __getitem__(self, index):
        if isinstance(index, slice):
            return TokenSequence(self.tokens[index], self.source_hash)
        return self.tokens[index]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def count(self, kind: TokenType) -> int:  # type: ignore[override]
        return sum(1 for t in self.tokens if t.kind is kind)

    def texts(self) -> list[str]:
        return [t.original for t in self.tokens]


_CHAR_MAP = {
    "\u2018": "'",
    "\u2019": "'",
    "\u02bc": "'",
    "\u201c": '"',
    "\u201d": '"',
    "\u201e": '"',
    "\u2013": "-",
    "\u2014": "-",
    "\u2026": "...",
    # non-breaking and narrow spaces
    "\u00a0": " ",
    "\u2007": " ",
    "\u2009": " ",
    "\u200a": " ",
    "\u202f": " ",
}
_TRANSLATION = str.maketrans(_CHAR_MAP)
_SPACE_RUN = regex.compile(r"[ \t]+")
_LINE_EDGE = regex.compile(r" ?\n ?")


def decode_utf8(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputEncodingError(exc.start) from None


def normalize_punctuation(text: Union[str, bytes]) -> str:
    """Canonicalize quotes, dashes, spaces and line endings.

    Bytes input is decoded as strict UTF-8. Text is NFC-composed so that
    precomposed and decomposed accents compare equal downstream. Guillemets
    are left alone.
    """
    if isinstance(text, (bytes, bytearray)):
        text = decode_utf8(bytes(text))
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    text = unicodedata.normalize("NFC", text).translate(_TRANSLATION)
    # After collapsing, a line edge carries at most one space.
    text = _SPACE_RUN.sub(" ", text)
    return _LINE_EDGE.sub("\n", text).strip(" ")


# A joiner (apostrophe or hyphen) belongs to a word when a letter touches it;
# combining marks only attach to a preceding letter or digit.
_WORD = (
    r"(?:[\p{L}\p{N}]|(?<=[\p{L}\p{N}]\p{M}*)\p{M}"
    r"|(?<=\p{L}\p{M}*)['\-]|['\-](?=\p{L}))+"
)
_WORD_RE = regex.compile(_WORD)
# Group 1: word, group 2: newline run, group 3: any other visible codepoint.
_TOKEN_RE = regex.compile(rf"({_WORD})|(\n+)|(\S)")
_new_token = tuple.__new__


def word_spans(line: str) -> list[tuple[int, int]]:
    """Character spans of the word tokens in a single line."""
    return [m.span() for m in _WORD_RE.finditer(line)]


def tokenize(text: Union[str, bytes]) -> TokenSequence:
    """Split lyric text into word, punctuation, parenthesis and break tokens.

    A newline ending a non-blank line becomes a LINE_BREAK token; any run of
    blank lines between two non-blank lines adds a single SECTION_BREAK
    after that LINE_BREAK. Leading and trailing blank lines are ignored.

    >>> [repr(t) for t in tokenize("A\\n\\nB")]
    ["W:'A'", '<LINE_BREAK>', '<SECTION_BREAK>', "W:'B'"]
    """
    text = normalize_punctuation(text)
    source_hash = hashlib.sha256(text.encode("utf-8")).hexdigest()
    tokens: list[Token] = []
    append = tokens.append
    word, punct, paren = TokenType.WORD, TokenType.PUNCT, TokenType.PAREN
    line = 0
    pending = None  # (line, offset, newline count) of a break not yet emitted
    for m in _TOKEN_RE.finditer(text):
        group = m.lastindex
        if group == 2:
            if tokens:
                pending = (line, m.start(), m.end() - m.start())
            line += m.end() - m.start()
            continue
        if pending is not None:
            brk_line, brk_offset, newlines = pending
            append(_new_token(Token, (LINE_BREAK_TEXT, TokenType.LINE_BREAK, brk_line,
                                      brk_offset, LINE_BREAK_TEXT, "L")))
            if newlines > 1:
                append(_new_token(Token, (SECTION_BREAK_TEXT, TokenType.SECTION_BREAK,
                                          brk_line, brk_offset, SECTION_BREAK_TEXT, "S")))
            pending = None
        original = m.group()
        if group == 1:
            folded = original.casefold()
            append(_new_token(Token, (original, word, line, m.start(), folded, "W" + folded)))
        elif original == "(" or original == ")":
            append(_new_token(Token, (original, paren, line, m.start(), original, "B" + original)))
        else:
            append(_new_token(Token, (original, punct, line, m.start(), original, "P" + original)))
    return TokenSequence(tokens, source_hash)


def strip_nonwords(seq: Sequence[Token]) -> TokenSequence:
    """Keep only WORD tokens, in order."""
    source_hash = seq.source_hash if isinstance(seq, TokenSequence) else ""
    return TokenSequence(
        tuple(t for t in seq if t.kind is TokenType.WORD), source_hash
    )
