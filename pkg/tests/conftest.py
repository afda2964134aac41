import random
from pathlib import Path

import pytest

from lyriceval.tokenizer import Token, TokenSequence, TokenType

FIXTURES = Path(__file__).parent / "fixtures"

_criteria: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        if rep.passed:
            status = "PASS"
        elif rep.skipped:
            status = "SKIP"
        else:
            status = "FAIL"
        detail = ""
        if rep.skipped and isinstance(rep.longrepr, tuple):
            detail = rep.longrepr[2]
        _criteria[label] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, (status, detail) in _criteria.items():
        terminalreporter.write_line(f"[{status}] {label}" + (f" ({detail})" if detail else ""))


@pytest.fixture
def fixture_texts():
    return {p.name: p.read_text(encoding="utf-8") for p in sorted(FIXTURES.glob("*.txt"))}


_TYPED_POOL = [
    ("a", TokenType.WORD),
    ("B", TokenType.WORD),
    ("b", TokenType.WORD),
    ("an", TokenType.WORD),
    ("and", TokenType.WORD),
    (",", TokenType.PUNCT),
    ("!", TokenType.PUNCT),
    ("(", TokenType.PAREN),
    (")", TokenType.PAREN),
    ("\n", TokenType.LINE_BREAK),
    ("\n\n", TokenType.SECTION_BREAK),
]


def random_typed_sequence(rng: random.Random, max_len: int = 12) -> TokenSequence:
    """Arbitrary typed tokens; not necessarily a valid tokenizer output."""
    n = rng.randint(0, max_len)
    return TokenSequence(tuple(Token(*rng.choice(_TYPED_POOL)) for _ in range(n)))


_WORDS = ["love", "Love", "night", "don't", "gon'", "gonna", "an", "and", "a", "this", "that", "la-la"]
_PUNCT = [",", "!", "?", ".", "'", "\""]


def random_lyrics(rng: random.Random, max_lines: int = 8) -> str:
    lines = []
    for _ in range(rng.randint(0, max_lines)):
        r = rng.random()
        if r < 0.15:
            lines.append("")
            continue
        words = [rng.choice(_WORDS) for _ in range(rng.randint(1, 6))]
        if rng.random() < 0.4:
            words.insert(rng.randint(0, len(words)), rng.choice(_PUNCT))
        if rng.random() < 0.2:
            words.append("(" + rng.choice(_WORDS) + ")")
        lines.append(" ".join(words))
    return "\n".join(lines)
