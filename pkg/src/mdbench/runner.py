"""Suite orchestration: load tests and candidate outputs, score, report.

Test suites are JSONL, one test per line.  Candidate outputs live under
``<root>/<model_id>/<pdf_stem>_p<page>.md`` with an optional JSON sidecar
per page carrying timing and status.  Pages that timed out or errored
count against the model: every test on such a page fails.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Optional

from mdbench.checks import (
    CATEGORIES,
    Order,
    Presence,
    Table,
    TestResult,
    UnitTest,
    run_test,
)
from mdbench.normalize import NORMALIZATION_VERSION, NormalizationProfile
from mdbench.tables import RELATION_KINDS

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_TIMEOUT = "timeout"
STATUS_ERROR = "error"


class TestSuiteError(ValueError):
    """Raised for malformed test suite files."""

    __test__ = False


@dataclass
class CandidateDoc:
    """One converter's markdown output for one page."""

    doc_id: str
    model_id: str
    markdown: str
    elapsed_seconds: Optional[float] = None
    dpi: Optional[int] = None
    status: str = STATUS_OK


@dataclass
class CategoryScore:
    tests_total: int
    tests_passed: int

    @property
    def mean_score(self) -> float:
        return self.tests_passed / self.tests_total if self.tests_total else 0.0


@dataclass
class ModelReport:
    model_id: str
    categories: dict[str, CategoryScore]
    all_categories: float
    seconds_per_page: Optional[float]
    invalid_tests: int = 0


@dataclass
class Report:
    models: list[ModelReport]
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "metadata": self.metadata,
            "models": {
                m.model_id: {
                    "categories": {
                        cat: {
                            "tests_total": s.tests_total,
                            "tests_passed": s.tests_passed,
                            "mean_score": round(s.mean_score, 6),
                        }
                        for cat, s in sorted(m.categories.items())
                    },
                    "all_categories": round(m.all_categories, 6),
                    "seconds_per_page": m.seconds_per_page,
                    "invalid_tests": m.invalid_tests,
                }
                for m in self.models
            },
        }


def doc_id_for(pdf: str, page: int) -> str:
    return f"{Path(pdf).stem}_p{page}"


_COMMON_KEYS = {"id", "pdf", "page", "category", "type", "max_diffs", "profile"}
_TYPE_KEYS = {
    "present": {"text"},
    "absent": {"text"},
    "order": {"before", "after"},
    "table": {"cell", *RELATION_KINDS},
}


def _parse_test(obj: dict) -> UnitTest:
    if not isinstance(obj, dict):
        raise TestSuiteError("test record must be a JSON object")
    type_name = obj.get("type")
    if type_name not in _TYPE_KEYS:
        raise TestSuiteError(f"bad type {type_name!r}")
    allowed = _COMMON_KEYS | _TYPE_KEYS[type_name]
    unknown = set(obj) - allowed
    if unknown:
        raise TestSuiteError(f"unknown keys for type {type_name!r}: {sorted(unknown)}")
    for key in ("id", "pdf", "category"):
        if not isinstance(obj.get(key), str) or not obj[key]:
            raise TestSuiteError(f"missing or empty {key!r}")
    page = obj.get("page")
    if not isinstance(page, int) or isinstance(page, bool) or page < 0:
        raise TestSuiteError("page must be a non-negative integer")
    max_diffs = obj.get("max_diffs", 0)
    if not isinstance(max_diffs, int) or isinstance(max_diffs, bool) or max_diffs < 0:
        raise TestSuiteError("max_diffs must be a non-negative integer")
    try:
        profile = NormalizationProfile.from_json(obj.get("profile"))
    except (TypeError, ValueError) as exc:
        raise TestSuiteError(f"bad profile: {exc}") from exc

    if type_name in ("present", "absent"):
        text = obj.get("text")
        if not isinstance(text, str):
            raise TestSuiteError("presence test needs a string 'text'")
        kind = Presence(target=text, must_appear=type_name == "present")
    elif type_name == "order":
        before, after = obj.get("before"), obj.get("after")
        if not isinstance(before, str) or not isinstance(after, str):
            raise TestSuiteError("order test needs string 'before' and 'after'")
        kind = Order(before=before, after=after)
    else:
        cell = obj.get("cell")
        if not isinstance(cell, str):
            raise TestSuiteError("table test needs a string 'cell'")
        relations = {k: obj[k] for k in RELATION_KINDS if k in obj}
        if not relations:
            raise TestSuiteError("table test needs at least one relation")
        for k, v in relations.items():
            if not isinstance(v, str):
                raise TestSuiteError(f"relation {k!r} must be a string")
        kind = Table(anchor=cell, relations=relations)

    try:
        return UnitTest(
            id=obj["id"],
            doc_id=doc_id_for(obj["pdf"], page),
            category=obj["category"],
            kind=kind,
            max_diffs=max_diffs,
            profile=profile,
        )
    except ValueError as exc:
        raise TestSuiteError(str(exc)) from exc


def test_to_json(test: UnitTest, pdf: str, page: int) -> dict:
    """Inverse of the JSONL parser, for persistence and the review API."""
    obj: dict = {
        "id": test.id,
        "pdf": pdf,
        "page": page,
        "category": test.category,
        "max_diffs": test.max_diffs,
        "profile": test.profile.to_json(),
    }
    if isinstance(test.kind, Presence):
        obj["type"] = "present" if test.kind.must_appear else "absent"
        obj["text"] = test.kind.target
    elif isinstance(test.kind, Order):
        obj["type"] = "order"
        obj["before"] = test.kind.before
        obj["after"] = test.kind.after
    else:
        obj["type"] = "table"
        obj["cell"] = test.kind.anchor
        obj.update(test.kind.relations)
    return obj


def load_tests(path: str | Path) -> list[UnitTest]:
    """Parse a JSONL suite; malformed lines and duplicate ids are fatal."""
    tests: list[UnitTest] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                test = _parse_test(obj)
            except (json.JSONDecodeError, TestSuiteError) as exc:
                raise TestSuiteError(f"{path}: line {lineno}: {exc}") from exc
            if test.id in seen:
                raise TestSuiteError(
                    f"{path}: line {lineno}: duplicate id {test.id!r} "
                    f"(first seen on line {seen[test.id]})"
                )
            seen[test.id] = lineno
            tests.append(test)
    return tests


def load_candidates(root: str | Path, model_id: str) -> dict[str, CandidateDoc]:
    """One CandidateDoc per ``<doc_id>.md`` under ``root/model_id``."""
    model_dir = Path(root) / model_id
    docs: dict[str, CandidateDoc] = {}
    if not model_dir.is_dir():
        return docs
    for md_path in sorted(model_dir.glob("*.md")):
        doc_id = md_path.stem
        elapsed = dpi = None
        status = STATUS_OK
        sidecar = md_path.with_suffix(".json")
        if sidecar.exists():
            try:
                meta = json.loads(sidecar.read_text(encoding="utf-8"))
                elapsed = meta.get("elapsed_seconds")
                dpi = meta.get("dpi")
                status = meta.get("status", STATUS_OK)
            except (OSError, json.JSONDecodeError) as exc:
                logger.warning("unreadable sidecar %s: %s", sidecar, exc)
        try:
            markdown = md_path.read_text(encoding="utf-8")
        except OSError as exc:
            logger.warning("unreadable candidate %s: %s", md_path, exc)
            docs[doc_id] = CandidateDoc(doc_id, model_id, "", status=STATUS_ERROR)
            continue
        docs[doc_id] = CandidateDoc(
            doc_id, model_id, markdown,
            elapsed_seconds=elapsed, dpi=dpi, status=status,
        )
    return docs


def run_suite(
    tests: Iterable[UnitTest],
    candidates: Mapping[str, CandidateDoc],
    model_id: str,
    workers: int = 8,
) -> list[TestResult]:
    """Evaluate every test against its page; missing/failed pages fail."""
    if workers < 1:
        raise ValueError("workers must be >= 1")

    def evaluate(test: UnitTest) -> TestResult:
        doc = candidates.get(test.doc_id)
        if doc is None or doc.status != STATUS_OK:
            return TestResult(
                test_id=test.id,
                model_id=model_id,
                passed=False,
                explanation="no candidate output",
                category=test.category,
                doc_id=test.doc_id,
            )
        return run_test(test, doc.markdown, model_id)

    test_list = list(tests)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(evaluate, test_list))
    results.sort(key=lambda r: r.test_id)
    return results


def aggregate(
    results: Iterable[TestResult],
    candidates: Mapping[str, Mapping[str, CandidateDoc]],
    mode: str = "macro",
) -> Report:
    """Fold results into per-model, per-category scores.

    ``macro`` averages the per-category means; ``micro`` is the global
    pass fraction.  Invalid tests count in neither numerator nor
    denominator and are surfaced separately.
    """
    if mode not in ("macro", "micro"):
        raise ValueError(f"unknown aggregation mode {mode!r}")
    by_model: dict[str, list[TestResult]] = {}
    for result in results:
        by_model.setdefault(result.model_id, []).append(result)

    models: list[ModelReport] = []
    empty_notes: dict[str, list[str]] = {}
    for model_id in sorted(by_model):
        model_results = by_model[model_id]
        invalid = sum(1 for r in model_results if r.invalid)
        valid = [r for r in model_results if not r.invalid]
        categories: dict[str, CategoryScore] = {}
        for r in valid:
            score = categories.setdefault(r.category, CategoryScore(0, 0))
            score.tests_total += 1
            score.tests_passed += int(r.passed)
        untested = [c for c in CATEGORIES if c not in categories]
        if untested:
            empty_notes[model_id] = untested
        if mode == "macro":
            means = [s.mean_score for s in categories.values()]
            overall = sum(means) / len(means) if means else 0.0
        else:
            total = sum(s.tests_total for s in categories.values())
            passed = sum(s.tests_passed for s in categories.values())
            overall = passed / total if total else 0.0
        timings = [
            doc.elapsed_seconds
            for doc in candidates.get(model_id, {}).values()
            if doc.status == STATUS_OK and doc.elapsed_seconds is not None
        ]
        seconds = sum(timings) / len(timings) if timings else None
        models.append(
            ModelReport(
                model_id=model_id,
                categories=categories,
                all_categories=overall,
                seconds_per_page=seconds,
                invalid_tests=invalid,
            )
        )
    metadata = {
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "normalization_version": NORMALIZATION_VERSION,
        "aggregation": mode,
    }
    if empty_notes:
        metadata["categories_without_tests"] = empty_notes
    return Report(models=models, metadata=metadata)


def _sorted_models(report: Report) -> list[ModelReport]:
    return sorted(report.models, key=lambda m: (-m.all_categories, m.model_id))


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.3f}"


def render_report(report: Report, format: str) -> str:
    """Serialize a report; identical reports yield identical bytes."""
    if format == "json":
        return json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    if format not in ("csv", "markdown-table"):
        raise ValueError(f"unknown report format {format!r}")
    header = ["model", *CATEGORIES, "seconds_per_page", "all_categories"]
    rows = [header]
    for model in _sorted_models(report):
        row = [model.model_id]
        for cat in CATEGORIES:
            score = model.categories.get(cat)
            row.append(_fmt(score.mean_score) if score else "")
        row.append(_fmt(model.seconds_per_page))
        row.append(_fmt(model.all_categories))
        rows.append(row)
    if format == "csv":
        return "\n".join(",".join(row) for row in rows) + "\n"
    lines = ["| " + " | ".join(rows[0]) + " |"]
    lines.append("|" + "|".join("---" for _ in rows[0]) + "|")
    lines.extend("| " + " | ".join(row) + " |" for row in rows[1:])
    return "\n".join(lines) + "\n"
