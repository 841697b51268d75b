"""Edit distance, approximate substring search, and character diffs.

Everything here works on already-normalized strings; callers decide what
normalization to apply first.  Distances are unit-cost Levenshtein over
Unicode scalar values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

# Above this many DP cells the row loop moves to numpy (same exact result).
_NUMPY_CELL_THRESHOLD = 1 << 18

Match = tuple[int, int, int]  # (start, end, diffs) — end exclusive


def _trim_common(a: str, b: str) -> tuple[str, str]:
    i = 0
    limit = min(len(a), len(b))
    while i < limit and a[i] == b[i]:
        i += 1
    j = 0
    while j < limit - i and a[len(a) - 1 - j] == b[len(b) - 1 - j]:
        j += 1
    return a[i : len(a) - j], b[i : len(b) - j]


def _distance_rows(a: str, b: str) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        append = cur.append
        for j, cb in enumerate(b, 1):
            append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _distance_rows_numpy(a: str, b: str) -> int:
    codes = np.frombuffer(b.encode("utf-32-le"), dtype=np.uint32)
    n = len(b)
    idx = np.arange(n + 1, dtype=np.int64)
    prev = idx.copy()
    base = np.empty(n + 1, dtype=np.int64)
    for i, ca in enumerate(map(ord, a), 1):
        base[0] = i
        np.minimum(prev[:-1] + (codes != ca), prev[1:] + 1, out=base[1:])
        # Left-neighbor insertions form a prefix-min once shifted by position.
        cur = np.minimum.accumulate(base - idx) + idx
        prev, base = cur, prev
    return int(prev[-1])


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance (unit-cost insert/delete/substitute)."""
    a, b = _trim_common(a, b)
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) * len(b) > _NUMPY_CELL_THRESHOLD:
        return _distance_rows_numpy(a, b)
    return _distance_rows(a, b)


def _semiglobal(needle: str, haystack: str) -> tuple[list[int], list[int]]:
    """Sellers semi-global DP: distance and start index per end position.

    ``dist[j]`` is the smallest edit distance between the needle and some
    substring of the haystack ending at ``j``; ``start[j]`` is where that
    substring begins (ties prefer diagonal moves, then needle deletions).
    """
    m, n = len(needle), len(haystack)
    dist = [0] * (n + 1)  # empty needle prefix matches for free anywhere
    start = list(range(n + 1))
    for i in range(1, m + 1):
        ch = needle[i - 1]
        diag_d = dist[0]
        diag_s = start[0]
        dist[0] = i
        start[0] = 0
        for j in range(1, n + 1):
            sub_d = diag_d + (haystack[j - 1] != ch)
            del_d = dist[j] + 1
            ins_d = dist[j - 1] + 1
            next_diag_d = dist[j]
            next_diag_s = start[j]
            if sub_d <= del_d and sub_d <= ins_d:
                dist[j] = sub_d
                start[j] = diag_s
            elif del_d <= ins_d:
                dist[j] = del_d
                # start[j] keeps the previous row's value
            else:
                dist[j] = ins_d
                start[j] = start[j - 1]
            diag_d = next_diag_d
            diag_s = next_diag_s
    return dist, start


def fuzzy_find(needle: str, haystack: str, max_diffs: int) -> list[Match]:
    """Non-overlapping best approximate occurrences of needle, left to right.

    Returns ``(start, end, diffs)`` triples for substrings within
    ``max_diffs`` edits of the needle.  Overlapping candidates are settled
    best-distance-first (then leftmost, then longest).  With
    ``max_diffs=0`` this is plain non-overlapping substring search.
    """
    if not needle:
        raise ValueError("needle must be non-empty")
    if max_diffs < 0:
        raise ValueError("max_diffs must be >= 0")
    if max_diffs == 0:
        matches: list[Match] = []
        pos = haystack.find(needle)
        while pos != -1:
            matches.append((pos, pos + len(needle), 0))
            pos = haystack.find(needle, pos + len(needle))
        return matches

    dist, start = _semiglobal(needle, haystack)
    candidates: list[Match] = []
    for j in range(len(haystack) + 1):
        if dist[j] <= max_diffs and j > start[j]:
            candidates.append((start[j], j, dist[j]))
    candidates.sort(key=lambda c: (c[2], c[0], -c[1]))
    chosen: list[Match] = []
    for cand in candidates:
        if all(cand[1] <= c[0] or c[1] <= cand[0] for c in chosen):
            chosen.append(cand)
    chosen.sort(key=lambda c: c[0])
    return chosen


def closest_match(needle: str, haystack: str) -> Match:
    """Best approximate occurrence regardless of budget (for explanations)."""
    if not needle:
        raise ValueError("needle must be non-empty")
    if not haystack:
        return (0, 0, len(needle))
    dist, start = _semiglobal(needle, haystack)
    best_j = min(range(len(haystack) + 1), key=lambda j: (dist[j], j))
    return (start[best_j], best_j, dist[best_j])


@dataclass(frozen=True)
class DiffHunk:
    """One run of a character-level edit script."""

    kind: Literal["equal", "insert", "delete"]
    text: str


_OPS = ("equal", "delete", "insert")


def char_diff(a: str, b: str) -> list[DiffHunk]:
    """Minimal insert/delete edit script from ``a`` to ``b``, fewest hunks.

    Primary objective is the usual minimal number of edited characters;
    among those scripts the one with the fewest kind changes is produced,
    so diffs stay readable.  Concatenating equal+delete hunks rebuilds
    ``a``; equal+insert rebuilds ``b``.
    """
    m, n = len(a), len(b)
    INF = (1 << 30, 1 << 30)
    # cost[i][j][op] = (edited chars, hunk count) for best script of
    # a[:i] -> b[:j] whose last op is _OPS[op]; slot 3 is the virtual
    # "no ops yet" start so the first hunk of any kind is counted.
    cost = [[[INF] * 4 for _ in range(n + 1)] for _ in range(m + 1)]
    back: list[list[list[Optional[int]]]] = [
        [[None] * 4 for _ in range(n + 1)] for _ in range(m + 1)
    ]
    cost[0][0][3] = (0, 0)
    for i in range(m + 1):
        for j in range(n + 1):
            for op in range(4):
                c = cost[i][j][op]
                if c == INF:
                    continue
                if i < m and j < n and a[i] == b[j]:
                    nc = (c[0], c[1] + (op != 0))
                    if nc < cost[i + 1][j + 1][0]:
                        cost[i + 1][j + 1][0] = nc
                        back[i + 1][j + 1][0] = op
                if i < m:
                    nc = (c[0] + 1, c[1] + (op != 1))
                    if nc < cost[i + 1][j][1]:
                        cost[i + 1][j][1] = nc
                        back[i + 1][j][1] = op
                if j < n:
                    nc = (c[0] + 1, c[1] + (op != 2))
                    if nc < cost[i][j + 1][2]:
                        cost[i][j + 1][2] = nc
                        back[i][j + 1][2] = op
    end_op = min(range(3), key=lambda op: cost[m][n][op])
    ops: list[int] = []
    i, j, op = m, n, end_op
    while not (i == 0 and j == 0):
        ops.append(op)
        prev = back[i][j][op]
        if op == 0:
            i, j = i - 1, j - 1
        elif op == 1:
            i -= 1
        else:
            j -= 1
        op = prev  # type: ignore[assignment]
    ops.reverse()

    hunks: list[DiffHunk] = []
    ai = bi = 0
    for op in ops:
        kind = _OPS[op]
        if op == 0:
            text, ai, bi = a[ai], ai + 1, bi + 1
        elif op == 1:
            text, ai = a[ai], ai + 1
        else:
            text, bi = b[bi], bi + 1
        if hunks and hunks[-1].kind == kind:
            hunks[-1] = DiffHunk(kind, hunks[-1].text + text)
        else:
            hunks.append(DiffHunk(kind, text))
    # Replacements read better deleted-then-inserted; swapping adjacent
    # insert/delete hunks changes neither reassembly order nor hunk count.
    for i in range(len(hunks) - 1):
        if hunks[i].kind == "insert" and hunks[i + 1].kind == "delete":
            hunks[i], hunks[i + 1] = hunks[i + 1], hunks[i]
    return hunks
