"""Minimum edit-distance alignment of token sequences.

The DP always runs over a boolean match matrix with unit costs. When the
full cost matrix fits in ``cell_budget`` cells it is filled in one go and
traced back directly. Larger problems are split by rows: the DP row at the
midpoint is computed forward in bounded chunks, the lower half is traced
back first to find where the path crosses the midpoint row, then the upper
half is solved up to that column. Every block sees the exact cost values of
the full matrix, so both routes return the same script.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Callable, Hashable, NamedTuple, Optional, Sequence

import numba
import numpy as np

__all__ = [
    "EditKind",
    "EditOp",
    "EditScript",
    "DEFAULT_CELL_BUDGET",
    "align",
    "char_distance",
]

DEFAULT_CELL_BUDGET = 25_000_000


class EditKind(enum.Enum):
    HIT = "hit"
    SUBSTITUTION = "sub"
    INSERTION = "ins"
    DELETION = "del"


class EditOp(NamedTuple):
    """One edit step. Deletions carry no hyp_index, insertions no ref_index."""

    kind: EditKind
    ref_index: Optional[int] = None
    hyp_index: Optional[int] = None


@dataclass(frozen=True)
class EditScript:
    ops: tuple[EditOp, ...]
    cost: int

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def count(self, kind: EditKind) -> int:
        return sum(1 for op in self.ops if op.kind is kind)


# Op codes used inside the kernels.
_HIT, _DEL, _INS, _SUB = 0, 1, 2, 3


@numba.njit(cache=True)
def _fill(ref, hyp, match, top):
    rows = ref.shape[0]
    cols = top.shape[0] - 1
    use_match = match.shape[0] > 0
    D = np.empty((rows + 1, cols + 1), np.int32)
    D[0, :] = top
    for i in range(1, rows + 1):
        left = D[i - 1, 0] + 1
        D[i, 0] = left
        r = ref[i - 1]
        for j in range(1, cols + 1):
            same = match[i - 1, j - 1] if use_match else r == hyp[j - 1]
            best = D[i - 1, j - 1] + (0 if same else 1)
            up = D[i - 1, j] + 1
            if up < best:
                best = up
            if left + 1 < best:
                best = left + 1
            D[i, j] = best
            left = best
    return D


@numba.njit(cache=True)
def _last_row(ref, hyp, match, top):
    rows = ref.shape[0]
    cols = top.shape[0] - 1
    use_match = match.shape[0] > 0
    prev = top.copy()
    cur = np.empty_like(prev)
    for i in range(1, rows + 1):
        left = prev[0] + 1
        cur[0] = left
        r = ref[i - 1]
        for j in range(1, cols + 1):
            same = match[i - 1, j - 1] if use_match else r == hyp[j - 1]
            best = prev[j - 1] + (0 if same else 1)
            up = prev[j] + 1
            if up < best:
                best = up
            if left + 1 < best:
                best = left + 1
            cur[j] = best
            left = best
        prev, cur = cur, prev
    return prev


@numba.njit(cache=True)
def _traceback(D, ref, hyp, match, j, to_origin):
    """Walk back from the bottom row at column ``j``.

    Stops on reaching row 0, or at (0, 0) when ``to_origin``. Returns op codes
    with block-local (i, j) of the cell each op leaves, in reverse order.
    """
    i = D.shape[0] - 1
    n_max = i + j + 1
    codes = np.empty(n_max, np.int8)
    ii = np.empty(n_max, np.int64)
    jj = np.empty(n_max, np.int64)
    k = 0
    while i > 0 or (to_origin and j > 0):
        if i > 0 and j > 0:
            same = match[i - 1, j - 1] if match.shape[0] > 0 else ref[i - 1] == hyp[j - 1]
            c = 0 if same else 1
            if D[i, j] == D[i - 1, j - 1] + c:
                codes[k] = 3 if c else 0
                ii[k] = i
                jj[k] = j
                i -= 1
                j -= 1
                k += 1
                continue
        if i > 0 and D[i, j] == D[i - 1, j] + 1:
            codes[k] = 1
            ii[k] = i
            jj[k] = j
            i -= 1
        else:
            codes[k] = 2
            ii[k] = i
            jj[k] = j
            j -= 1
        k += 1
    return codes[:k], ii[:k], jj[:k], j


def _encode(items, key, ids: dict) -> np.ndarray:
    codes = []
    for k in map(key, items):
        code = ids.get(k)
        if code is None:
            code = ids[k] = len(ids)
        codes.append(code)
    return np.array(codes, dtype=np.int64)


_NO_MATCH = np.zeros((0, 0), dtype=np.bool_)


class _Matcher:
    """Integer codes per item, or a precomputed match matrix for predicates."""

    def __init__(self, reference, hypothesis, key, equality):
        n, m = len(reference), len(hypothesis)
        self.ref_codes = np.zeros(n, dtype=np.int64)
        self.hyp_codes = np.zeros(m, dtype=np.int64)
        self.full = None
        if equality is None:
            ids: dict[Hashable, int] = {}
            self.ref_codes = _encode(reference, key, ids)
            self.hyp_codes = _encode(hypothesis, key, ids)
        else:
            self.full = np.array(
                [[bool(equality(r, h)) for h in hypothesis] for r in reference],
                dtype=np.bool_,
            ).reshape(n, m)

    def block(self, lo: int, hi: int, width: int):
        match = _NO_MATCH if self.full is None else np.ascontiguousarray(self.full[lo:hi, :width])
        return self.ref_codes[lo:hi], self.hyp_codes[:width], match


def _solve(matcher: _Matcher, lo, hi, top, budget, out):
    """Append reversed ops for the path from (hi, len(top)-1) up to row ``lo``.

    Returns the column where the path reaches row ``lo``.
    """
    width = top.shape[0] - 1
    if (hi - lo) * (width + 1) <= budget or hi - lo <= 1:
        ref, hyp, match = matcher.block(lo, hi, width)
        D = _fill(ref, hyp, match, top)
        codes, ii, jj, j_end = _traceback(D, ref, hyp, match, width, lo == 0)
        out.append((codes, ii + lo, jj))
        return j_end
    mid = (lo + hi) // 2
    row = top
    step = max(1, budget // (width + 1))
    for start in range(lo, mid, step):
        stop = min(mid, start + step)
        row = _last_row(*matcher.block(start, stop, width), row)
    j_mid = _solve(matcher, mid, hi, row, budget, out)
    return _solve(matcher, lo, mid, top[: j_mid + 1].copy(), budget, out)


def align(
    reference: Sequence[Any],
    hypothesis: Sequence[Any],
    equality: Optional[Callable[[Any, Any], bool]] = None,
    *,
    key: Optional[Callable[[Any], Hashable]] = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> EditScript:
    """Align two sequences with unit-cost edits.

    Tokens are equal when their ``key`` values are equal (default: the
    token's ``match_key``, or the item itself for non-token items). An
    arbitrary ``equality`` predicate may be given instead; it is evaluated
    on every pair, so use it only for modest inputs.

    Among minimum-cost scripts the one returned is fixed: tracing back from
    the end, a diagonal step wins ties, then a deletion, then an insertion.
    """
    if key is None:
        key = _default_key
    n, m = len(reference), len(hypothesis)
    if n == 0 or m == 0:
        ops = [EditOp(EditKind.DELETION, i) for i in range(n)]
        ops += [EditOp(EditKind.INSERTION, None, j) for j in range(m)]
        return EditScript(tuple(ops), n + m)

    matcher = _Matcher(reference, hypothesis, key, equality)
    top = np.arange(m + 1, dtype=np.int64)
    pieces: list = []
    _solve(matcher, 0, n, top, max(1, int(cell_budget)), pieces)

    ops: list[EditOp] = []
    cost = 0
    for codes, ii, jj in reversed(pieces):
        for code, i, j in zip(codes[::-1].tolist(), ii[::-1].tolist(), jj[::-1].tolist()):
            if code == _HIT:
                ops.append(EditOp(EditKind.HIT, i - 1, j - 1))
                continue
            cost += 1
            if code == _SUB:
                ops.append(EditOp(EditKind.SUBSTITUTION, i - 1, j - 1))
            elif code == _DEL:
                ops.append(EditOp(EditKind.DELETION, i - 1))
            else:
                ops.append(EditOp(EditKind.INSERTION, None, j - 1))
    return EditScript(tuple(ops), cost)


def _default_key(item):
    try:
        return item.match_key
    except AttributeError:
        return item


def char_distance(a: str, b: str) -> int:
    """Levenshtein distance between two strings, by codepoint."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j - 1] + (ca != cb), prev[j] + 1, cur[j - 1] + 1))
        prev = cur
    return prev[-1]
