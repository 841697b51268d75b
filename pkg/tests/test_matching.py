import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdbench.matching import (
    DiffHunk,
    char_diff,
    closest_match,
    edit_distance,
    fuzzy_find,
)
from mdbench.matching import _distance_rows, _distance_rows_numpy


def dp_oracle(a: str, b: str) -> int:
    """Full-matrix reference distance, deliberately naive."""
    m, n = len(a), len(b)
    matrix = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        matrix[i][0] = i
    for j in range(n + 1):
        matrix[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            matrix[i][j] = min(
                matrix[i - 1][j] + 1,
                matrix[i][j - 1] + 1,
                matrix[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return matrix[m][n]


def naive_substring_matches(needle: str, haystack: str) -> list[tuple[int, int, int]]:
    """Left-to-right non-overlapping exact search (the k=0 contract)."""
    matches = []
    pos = haystack.find(needle)
    while pos != -1:
        matches.append((pos, pos + len(needle), 0))
        pos = haystack.find(needle, pos + len(needle))
    return matches


class TestEditDistance:
    @pytest.mark.parametrize(
        "a,b,expected",
        [("", "abc", 3), ("x", "x", 0), ("kitten", "sitting", 3), ("abc", "", 3)],
    )
    def test_known_values(self, a, b, expected):
        assert edit_distance(a, b) == expected

    def test_matches_oracle_on_randoms(self):
        rng = random.Random(7)
        for _ in range(500):
            a = "".join(rng.choice("abc") for _ in range(rng.randint(0, 12)))
            b = "".join(rng.choice("abc") for _ in range(rng.randint(0, 12)))
            assert edit_distance(a, b) == dp_oracle(a, b)

    def test_python_and_numpy_rows_agree(self):
        rng = random.Random(11)
        for _ in range(60):
            a = "".join(rng.choice("abcdé") for _ in range(rng.randint(1, 40)))
            b = "".join(rng.choice("abcdé") for _ in range(rng.randint(1, 40)))
            assert _distance_rows(a, b) == _distance_rows_numpy(a, b)

    def test_long_inputs_use_numpy_and_stay_exact(self):
        a = ("lorem ipsum dolor sit amet " * 40)[:1000]
        b = a[:400] + "X" + a[401:800] + a[810:]
        assert edit_distance(a, b) == dp_oracle(a, b)

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=10), st.text(max_size=10), st.text(max_size=10))
    def test_metric_properties(self, a, b, c):
        assert edit_distance(a, b) == edit_distance(b, a)
        assert (edit_distance(a, b) == 0) == (a == b)
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


class TestFuzzyFind:
    def test_exact_hit(self):
        assert fuzzy_find("abc", "xxabcxx", 0) == [(2, 5, 0)]

    def test_one_diff(self):
        matches = fuzzy_find("abc", "xxabdxx", 1)
        assert len(matches) == 1
        assert matches[0][2] == 1

    def test_no_match(self):
        assert fuzzy_find("abc", "xyz", 0) == []

    def test_multiple_non_overlapping(self):
        assert fuzzy_find("aa", "aaxaa", 0) == [(0, 2, 0), (3, 5, 0)]

    def test_overlapping_resolved_left_to_right(self):
        assert fuzzy_find("aa", "aaaa", 0) == [(0, 2, 0), (2, 4, 0)]

    def test_empty_needle_rejected(self):
        with pytest.raises(ValueError):
            fuzzy_find("", "abc", 0)

    def test_agrees_with_naive_search(self):
        rng = random.Random(3)
        for _ in range(2000):
            needle = "".join(rng.choice("ab") for _ in range(rng.randint(1, 4)))
            haystack = "".join(rng.choice("ab") for _ in range(rng.randint(0, 30)))
            assert fuzzy_find(needle, haystack, 0) == naive_substring_matches(
                needle, haystack
            )

    def test_budget_grows_match_set_existence(self):
        rng = random.Random(5)
        for _ in range(300):
            needle = "".join(rng.choice("abc") for _ in range(rng.randint(1, 5)))
            haystack = "".join(rng.choice("abc") for _ in range(rng.randint(0, 25)))
            for k in range(3):
                if fuzzy_find(needle, haystack, k):
                    assert fuzzy_find(needle, haystack, k + 1)

    def test_match_distance_within_budget(self):
        rng = random.Random(9)
        for _ in range(300):
            needle = "".join(rng.choice("abc") for _ in range(rng.randint(1, 5)))
            haystack = "".join(rng.choice("abc") for _ in range(rng.randint(0, 25)))
            for start, end, diffs in fuzzy_find(needle, haystack, 2):
                assert diffs <= 2
                assert dp_oracle(needle, haystack[start:end]) == diffs


class TestClosestMatch:
    def test_exact(self):
        assert closest_match("abc", "xxabcxx") == (2, 5, 0)

    def test_empty_haystack(self):
        assert closest_match("abc", "") == (0, 0, 3)

    def test_reports_minimum_distance(self):
        rng = random.Random(13)
        for _ in range(200):
            needle = "".join(rng.choice("ab") for _ in range(rng.randint(1, 4)))
            haystack = "".join(rng.choice("ab") for _ in range(rng.randint(1, 15)))
            _, _, diffs = closest_match(needle, haystack)
            best = min(
                dp_oracle(needle, haystack[i:j])
                for i in range(len(haystack) + 1)
                for j in range(i, len(haystack) + 1)
            )
            assert diffs == best


def brute_force_min_hunks(a: str, b: str) -> tuple[int, int]:
    """(min edited chars, min hunk count among those scripts), by search."""
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def go(i: int, j: int, last: str) -> tuple[int, int]:
        if i == len(a) and j == len(b):
            return (0, 0)
        options = []
        if i < len(a) and j < len(b) and a[i] == b[j]:
            ops, hunks = go(i + 1, j + 1, "equal")
            options.append((ops, hunks + (last != "equal")))
        if i < len(a):
            ops, hunks = go(i + 1, j, "delete")
            options.append((ops + 1, hunks + (last != "delete")))
        if j < len(b):
            ops, hunks = go(i, j + 1, "insert")
            options.append((ops + 1, hunks + (last != "insert")))
        return min(options)

    return go(0, 0, "none")


class TestCharDiff:
    def test_equal(self):
        assert char_diff("abc", "abc") == [DiffHunk("equal", "abc")]

    def test_substitution(self):
        assert char_diff("abc", "axc") == [
            DiffHunk("equal", "a"),
            DiffHunk("delete", "b"),
            DiffHunk("insert", "x"),
            DiffHunk("equal", "c"),
        ]

    def test_reassembly_invariant(self):
        rng = random.Random(17)
        for _ in range(300):
            a = "".join(rng.choice("abcd") for _ in range(rng.randint(0, 10)))
            b = "".join(rng.choice("abcd") for _ in range(rng.randint(0, 10)))
            hunks = char_diff(a, b)
            target = "".join(h.text for h in hunks if h.kind in ("equal", "delete"))
            candidate = "".join(h.text for h in hunks if h.kind in ("equal", "insert"))
            assert target == a
            assert candidate == b

    def test_minimal_ops_and_hunks(self):
        rng = random.Random(19)
        for _ in range(150):
            a = "".join(rng.choice("abc") for _ in range(rng.randint(0, 8)))
            b = "".join(rng.choice("abc") for _ in range(rng.randint(0, 8)))
            hunks = char_diff(a, b)
            ops = sum(len(h.text) for h in hunks if h.kind != "equal")
            best_ops, best_hunks = brute_force_min_hunks(a, b)
            assert ops == best_ops
            assert len(hunks) == best_hunks
