"""Unit-test kinds and their evaluation against one candidate document.

Three families of checks exist: a span must appear (or stay absent), two
spans must occur in reading order, and a table cell must sit in a stated
relation to its neighbors/headings.  All text comparison happens after
normalizing both sides with the test's own profile; ``max_diffs`` is the
edit-operation budget for fuzzy comparisons (0 = exact).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from mdbench.matching import closest_match, edit_distance, fuzzy_find
from mdbench.normalize import NormalizationProfile, normalize
from mdbench.tables import RELATION_KINDS, extract_tables, relation_lookup

CATEGORIES = (
    "baseline",
    "forms",
    "graphics",
    "handwritten",
    "long_table",
    "multicolumn",
    "tiny_text",
)


@dataclass(frozen=True)
class Presence:
    target: str
    must_appear: bool = True


@dataclass(frozen=True)
class Order:
    before: str
    after: str


@dataclass(frozen=True)
class Table:
    anchor: str
    relations: Mapping[str, str]

    def __post_init__(self) -> None:
        if not self.relations:
            raise ValueError("table test needs at least one relation")
        unknown = set(self.relations) - set(RELATION_KINDS)
        if unknown:
            raise ValueError(f"unknown relation kinds: {sorted(unknown)}")


TestKind = Union[Presence, Order, Table]


@dataclass(frozen=True)
class UnitTest:
    id: str
    doc_id: str
    category: str
    kind: TestKind
    max_diffs: int = 0
    profile: NormalizationProfile = field(default_factory=NormalizationProfile)

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if self.max_diffs < 0:
            raise ValueError("max_diffs must be >= 0")


@dataclass
class TestResult:
    __test__ = False  # keep pytest from collecting this as a test class

    test_id: str
    model_id: str
    passed: bool
    explanation: str = ""
    matched_span: Optional[tuple[int, int]] = None
    invalid: bool = False
    category: str = ""
    doc_id: str = ""

    def __post_init__(self) -> None:
        if not self.passed and not self.explanation:
            raise ValueError("failing results need an explanation")


def _invalid(test: UnitTest, what: str) -> TestResult:
    return TestResult(
        test_id=test.id,
        model_id="",
        passed=False,
        invalid=True,
        explanation=f"invalid test: {what} empty after normalization",
        category=test.category,
        doc_id=test.doc_id,
    )


def _result(test: UnitTest, passed: bool, explanation: str = "",
            span: Optional[tuple[int, int]] = None) -> TestResult:
    return TestResult(
        test_id=test.id,
        model_id="",
        passed=passed,
        explanation=explanation,
        matched_span=span,
        category=test.category,
        doc_id=test.doc_id,
    )


def _near_miss(target: str, candidate: str) -> str:
    if not candidate:
        return "candidate is empty after normalization"
    start, end, diffs = closest_match(target, candidate)
    return f"closest match at distance {diffs}: {candidate[start:end]!r}"


def eval_presence(test: UnitTest, candidate_markdown: str) -> TestResult:
    """Span must appear (must_appear) or must be absent (headers/footers)."""
    assert isinstance(test.kind, Presence)
    target = normalize(test.kind.target, test.profile)
    if not target:
        return _invalid(test, "target")
    candidate = normalize(candidate_markdown, test.profile)
    matches = fuzzy_find(target, candidate, test.max_diffs)
    if test.kind.must_appear:
        if matches:
            start, end, _ = matches[0]
            return _result(test, True, span=(start, end))
        return _result(
            test, False,
            f"span not found within {test.max_diffs} diffs; "
            + _near_miss(target, candidate),
        )
    if matches:
        start, end, diffs = matches[0]
        return _result(
            test, False,
            f"forbidden span found at {start}..{end} (distance {diffs})",
            span=(start, end),
        )
    return _result(test, True)


def eval_order(test: UnitTest, candidate_markdown: str) -> TestResult:
    """`before` must start strictly before the last occurrence of `after`."""
    assert isinstance(test.kind, Order)
    before = normalize(test.kind.before, test.profile)
    after = normalize(test.kind.after, test.profile)
    if not before:
        return _invalid(test, "before span")
    if not after:
        return _invalid(test, "after span")
    candidate = normalize(candidate_markdown, test.profile)
    before_matches = fuzzy_find(before, candidate, test.max_diffs)
    after_matches = fuzzy_find(after, candidate, test.max_diffs)
    missing = [
        name
        for name, found in (("before", before_matches), ("after", after_matches))
        if not found
    ]
    if missing:
        return _result(test, False, f"span missing: {' and '.join(missing)}")
    earliest_before = min(m[0] for m in before_matches)
    latest_after = max(m[0] for m in after_matches)
    if earliest_before < latest_after:
        first = min(before_matches, key=lambda m: m[0])
        return _result(test, True, span=(first[0], first[1]))
    return _result(
        test, False,
        f"order violated: before at {earliest_before}, after at {latest_after}",
    )


def eval_table(test: UnitTest, candidate_markdown: str) -> TestResult:
    """Some table cell matching the anchor must satisfy every relation."""
    assert isinstance(test.kind, Table)
    anchor = normalize(test.kind.anchor, test.profile)
    if not anchor:
        return _invalid(test, "anchor")
    expected = {
        kind: normalize(text, test.profile) for kind, text in test.kind.relations.items()
    }
    grids = extract_tables(candidate_markdown)
    if not grids:
        return _result(test, False, "no table found")

    def matches(found: Optional[str], want: str) -> bool:
        if found is None:
            return False
        return edit_distance(normalize(found, test.profile), want) <= test.max_diffs

    best_satisfied = -1
    best_failure = ""
    anchor_seen = False
    for grid in grids:
        for cell in grid.origins():
            if edit_distance(normalize(cell.text, test.profile), anchor) > test.max_diffs:
                continue
            anchor_seen = True
            satisfied = 0
            failure = ""
            for kind, want in expected.items():
                found = relation_lookup(grid, (cell.row, cell.col), kind)
                if matches(found, want):
                    satisfied += 1
                elif not failure:
                    got = "table edge" if found is None else repr(found)
                    failure = f"relation {kind}: expected {test.kind.relations[kind]!r}, found {got}"
            if satisfied == len(expected):
                return _result(test, True)
            if satisfied > best_satisfied:
                best_satisfied = satisfied
                best_failure = failure
    if not anchor_seen:
        return _result(
            test, False,
            f"anchor {test.kind.anchor!r} not found in any of {len(grids)} table(s)",
        )
    return _result(test, False, best_failure)


def run_test(test: UnitTest, candidate_markdown: str, model_id: str) -> TestResult:
    """Dispatch to the right evaluator and stamp the model id."""
    if isinstance(test.kind, Presence):
        result = eval_presence(test, candidate_markdown)
    elif isinstance(test.kind, Order):
        result = eval_order(test, candidate_markdown)
    elif isinstance(test.kind, Table):
        result = eval_table(test, candidate_markdown)
    else:  # pragma: no cover - kinds are closed
        raise TypeError(f"unknown test kind: {type(test.kind).__name__}")
    result.model_id = model_id
    return result
