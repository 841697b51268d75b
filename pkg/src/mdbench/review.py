"""HTTP backend for human verification of tests and failure audits.

Serves tests with their live pass/fail status, page images, raw candidate
text and character diffs; accepts test edits (target text, normalization
settings, edit budget) and review labels for failing tests; summarizes
reviews into responsibility shares and a label histogram.

Persistence is append-only JSONL: one file of test edits, one of reviews.
Both are diff-able and live alongside the suite they describe, so the
whole benchmark stays reviewable as a repository.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse, Response
from pydantic import BaseModel

from mdbench.checks import Order, Presence, Table, TestResult, UnitTest, run_test
from mdbench.gateway import DEFAULT_RASTERIZER, RasterizeError, rasterize_page
from mdbench.matching import DiffHunk, char_diff, closest_match
from mdbench.normalize import NormalizationProfile, normalize
from mdbench.runner import (
    STATUS_OK,
    TestSuiteError,
    _parse_test,
    load_candidates,
    load_tests,
)

RESPONSIBLE_VALUES = ("model", "benchmark", "ambiguity")

# Suggested (not enforced) review labels; audits may use their own.
SUGGESTED_LABELS = (
    "missing_paragraph",
    "Error character",
    "Error word",
    "broken paragraph",
    "parsed_only_title",
    "blank page",
    "Structure error",
    "No table",
    "Top heading not well classified",
    "error_annotation",
)

REVIEW_DPI = 150


@dataclass(frozen=True)
class ReviewRecord:
    """One human verdict on a failing test."""

    test_id: str
    label: str
    responsible: str
    reviewer: str
    timestamp: str
    comment: str = ""

    def __post_init__(self) -> None:
        if self.responsible not in RESPONSIBLE_VALUES:
            raise ValueError(
                f"responsible must be one of {RESPONSIBLE_VALUES}, got {self.responsible!r}"
            )

    def to_json(self) -> dict:
        return {
            "test_id": self.test_id,
            "label": self.label,
            "responsible": self.responsible,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
            "comment": self.comment,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ReviewRecord":
        return cls(
            test_id=obj["test_id"],
            label=obj["label"],
            responsible=obj["responsible"],
            reviewer=obj.get("reviewer", "anonymous"),
            timestamp=obj.get("timestamp", ""),
            comment=obj.get("comment", ""),
        )


@dataclass
class AuditSummary:
    total: int
    responsibility: dict[str, tuple[int, int]]  # name -> (count, whole percent)
    labels: list[tuple[str, int]]  # sorted by count desc, then label

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "responsibility": {
                name: {"count": count, "percent": percent}
                for name, (count, percent) in self.responsibility.items()
            },
            "labels": [{"label": label, "count": count} for label, count in self.labels],
        }


def audit_summary(reviews: Iterable[ReviewRecord]) -> AuditSummary:
    """Responsibility shares (whole percents) and label histogram."""
    records = list(reviews)
    total = len(records)
    responsibility: dict[str, tuple[int, int]] = {}
    for name in RESPONSIBLE_VALUES:
        count = sum(1 for r in records if r.responsible == name)
        percent = round(count / total * 100) if total else 0
        responsibility[name] = (count, percent)
    histogram: dict[str, int] = {}
    for record in records:
        histogram[record.label] = histogram.get(record.label, 0) + 1
    labels = sorted(histogram.items(), key=lambda kv: (-kv[1], kv[0]))
    return AuditSummary(total=total, responsibility=responsibility, labels=labels)


def diff_spans(
    target: str, candidate_window: str, profile: NormalizationProfile
) -> list[DiffHunk]:
    """Minimal character edit script between the normalized strings."""
    return char_diff(normalize(target, profile), normalize(candidate_window, profile))


def _primary_target(test: UnitTest) -> str:
    if isinstance(test.kind, Presence):
        return test.kind.target
    if isinstance(test.kind, Order):
        return test.kind.before
    assert isinstance(test.kind, Table)
    return test.kind.anchor


_PATCHABLE_COMMON = {"profile", "max_diffs", "masks"}
_PATCHABLE_BY_TYPE = {
    "present": {"text"},
    "absent": {"text"},
    "order": {"before", "after"},
    "table": {"cell", "up", "down", "left", "right", "top_heading", "left_heading"},
}


class ReviewStore:
    """Tests, candidates, edits and reviews behind a single-writer lock."""

    def __init__(
        self,
        tests_path: str | Path,
        candidates_root: str | Path,
        edits_path: str | Path | None = None,
        reviews_path: str | Path | None = None,
        pdf_dir: str | Path | None = None,
        images_dir: str | Path | None = None,
        rasterizer_cmd: str = DEFAULT_RASTERIZER,
        cache_dir: str | Path | None = None,
    ):
        self.tests_path = Path(tests_path)
        self.candidates_root = Path(candidates_root)
        self.edits_path = Path(edits_path) if edits_path else self.tests_path.with_suffix(".edits.jsonl")
        self.reviews_path = Path(reviews_path) if reviews_path else self.tests_path.with_suffix(".reviews.jsonl")
        self.pdf_dir = Path(pdf_dir) if pdf_dir else None
        self.images_dir = Path(images_dir) if images_dir else None
        self.rasterizer_cmd = rasterizer_cmd
        self.cache_dir = Path(cache_dir) if cache_dir else self.candidates_root / ".raster-cache"
        self._lock = threading.Lock()

        self._raw: dict[str, dict] = {}
        self._tests: dict[str, UnitTest] = {}
        for test, line in zip(load_tests(self.tests_path), self._read_lines(self.tests_path)):
            self._raw[test.id] = line
            self._tests[test.id] = test
        self._replay_edits()

        self._reviews: list[ReviewRecord] = []
        self._review_keys: set[tuple[str, str, str]] = set()
        if self.reviews_path.exists():
            for obj in map(json.loads, self._read_raw_lines(self.reviews_path)):
                self._remember_review(ReviewRecord.from_json(obj))

        self._candidates: dict[str, dict] = {}
        self._eval_cache: dict[tuple[str, str], TestResult] = {}

    @staticmethod
    def _read_raw_lines(path: Path) -> list[str]:
        return [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]

    @classmethod
    def _read_lines(cls, path: Path) -> list[dict]:
        return [json.loads(line) for line in cls._read_raw_lines(path)]

    def _replay_edits(self) -> None:
        if not self.edits_path.exists():
            return
        for entry in self._read_lines(self.edits_path):
            raw = entry["after"]
            test = _parse_test(raw)
            self._raw[test.id] = raw
            self._tests[test.id] = test

    def _remember_review(self, record: ReviewRecord) -> bool:
        key = (record.test_id, record.reviewer, record.timestamp)
        if key in self._review_keys:
            return False
        self._review_keys.add(key)
        self._reviews.append(record)
        return True

    @staticmethod
    def _append_line(path: Path, obj: dict) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")

    # -- tests ---------------------------------------------------------

    @property
    def tests(self) -> dict[str, UnitTest]:
        return dict(self._tests)

    def get_test(self, test_id: str) -> UnitTest:
        try:
            return self._tests[test_id]
        except KeyError:
            raise KeyError(f"unknown test {test_id!r}") from None

    def raw_test(self, test_id: str) -> dict:
        self.get_test(test_id)
        return dict(self._raw[test_id])

    def doc_source(self, doc_id: str) -> Optional[tuple[str, int]]:
        for raw in self._raw.values():
            if f"{Path(raw['pdf']).stem}_p{raw['page']}" == doc_id:
                return raw["pdf"], raw["page"]
        return None

    def update_test(self, test_id: str, patch: dict) -> UnitTest:
        """Apply a whitelisted patch, persist it, and invalidate caches."""
        with self._lock:
            old_raw = self.raw_test(test_id)
            allowed = _PATCHABLE_COMMON | _PATCHABLE_BY_TYPE[old_raw["type"]]
            unknown = set(patch) - allowed
            if unknown:
                raise ValueError(f"patch may not touch {sorted(unknown)}")
            new_raw = dict(old_raw)
            for key, value in patch.items():
                if key == "masks":
                    profile = dict(new_raw.get("profile") or {})
                    profile["masks"] = value
                    new_raw["profile"] = profile
                else:
                    new_raw[key] = value
            try:
                test = _parse_test(new_raw)
            except TestSuiteError as exc:
                raise ValueError(str(exc)) from exc
            targets = {
                "present": lambda k: [k.target],
                "absent": lambda k: [k.target],
                "order": lambda k: [k.before, k.after],
                "table": lambda k: [k.anchor],
            }[new_raw["type"]](test.kind)
            for text in targets:
                if not normalize(text, test.profile):
                    raise ValueError("rejected: target empty after normalization")
            self._append_line(
                self.edits_path,
                {
                    "timestamp": _now(),
                    "test_id": test_id,
                    "before": old_raw,
                    "after": new_raw,
                },
            )
            self._raw[test_id] = new_raw
            self._tests[test_id] = test
            self._eval_cache = {
                k: v for k, v in self._eval_cache.items() if k[0] != test_id
            }
            return test

    # -- reviews -------------------------------------------------------

    @property
    def reviews(self) -> list[ReviewRecord]:
        return list(self._reviews)

    def record_review(self, record: ReviewRecord) -> bool:
        """Store one review; duplicates (same test/reviewer/time) are no-ops."""
        self.get_test(record.test_id)
        with self._lock:
            stored = self._remember_review(record)
            if stored:
                self._append_line(self.reviews_path, record.to_json())
            return stored

    # -- evaluation ----------------------------------------------------

    def candidates(self, model: str) -> dict:
        if model not in self._candidates:
            self._candidates[model] = load_candidates(self.candidates_root, model)
        return self._candidates[model]

    def evaluate(self, test_id: str, model: str) -> TestResult:
        key = (test_id, model)
        if key not in self._eval_cache:
            test = self.get_test(test_id)
            doc = self.candidates(model).get(test.doc_id)
            if doc is None or doc.status != STATUS_OK:
                result = TestResult(
                    test_id=test.id,
                    model_id=model,
                    passed=False,
                    explanation="no candidate output",
                    category=test.category,
                    doc_id=test.doc_id,
                )
            else:
                result = run_test(test, doc.markdown, model)
            self._eval_cache[key] = result
        return self._eval_cache[key]

    def status_of(self, result: TestResult) -> str:
        if result.invalid:
            return "invalid"
        return "pass" if result.passed else "fail"

    def diff_payload(self, test_id: str, model: str) -> dict:
        """Everything the diff view needs: hunks, window, context, status."""
        test = self.get_test(test_id)
        result = self.evaluate(test_id, model)
        doc = self.candidates(model).get(test.doc_id)
        raw_markdown = doc.markdown if doc is not None else ""
        target_norm = normalize(_primary_target(test), test.profile)
        candidate_norm = normalize(raw_markdown, test.profile)
        if result.matched_span is not None:
            start, end = result.matched_span
        elif target_norm and candidate_norm:
            start, end, _ = closest_match(target_norm, candidate_norm)
        else:
            start = end = 0
        window = candidate_norm[start:end]
        hunks = char_diff(target_norm, window) if target_norm else []
        raw_hint = None
        equal_texts = sorted(
            (h.text for h in hunks if h.kind == "equal"), key=len, reverse=True
        )
        for text in equal_texts:
            pos = raw_markdown.find(text)
            if pos != -1:
                raw_hint = {"start": pos, "end": pos + len(text)}
                break
        return {
            "test_id": test_id,
            "model": model,
            "status": self.status_of(result),
            "explanation": result.explanation,
            "target": target_norm,
            "window": {"start": start, "end": end, "text": window},
            "context_before": candidate_norm[max(0, start - 80) : start],
            "context_after": candidate_norm[end : end + 80],
            "hunks": [{"kind": h.kind, "text": h.text} for h in hunks],
            "raw_hint": raw_hint,
        }

    # -- page images ---------------------------------------------------

    def page_image(self, doc_id: str) -> bytes:
        if self.images_dir is not None:
            pre_rendered = self.images_dir / f"{doc_id}.png"
            if pre_rendered.exists():
                return pre_rendered.read_bytes()
        source = self.doc_source(doc_id)
        if source is None or self.pdf_dir is None:
            raise FileNotFoundError(f"no image available for {doc_id}")
        pdf, page = source
        return rasterize_page(
            self.pdf_dir / pdf, page, REVIEW_DPI, self.rasterizer_cmd, self.cache_dir
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class ReviewBody(BaseModel):
    test_id: str
    label: str
    responsible: str
    reviewer: str = "anonymous"
    timestamp: str = ""
    comment: str = ""


def create_app(store: ReviewStore) -> FastAPI:
    app = FastAPI(title="mdbench review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def test_summary(test: UnitTest, model: Optional[str]) -> dict:
        raw = store.raw_test(test.id)
        item = {
            "id": test.id,
            "doc_id": test.doc_id,
            "category": test.category,
            "type": raw["type"],
            "target": _primary_target(test),
            "max_diffs": test.max_diffs,
        }
        if model:
            result = store.evaluate(test.id, model)
            item["status"] = store.status_of(result)
            item["explanation"] = result.explanation
        return item

    @app.get("/tests")
    def list_tests(
        category: Optional[str] = Query(default=None),
        status: Optional[str] = Query(default=None),
        model: Optional[str] = Query(default=None),
    ):
        if status and not model:
            raise HTTPException(422, "status filtering requires a model")
        items = []
        for test in sorted(store.tests.values(), key=lambda t: t.id):
            if category and test.category != category:
                continue
            item = test_summary(test, model)
            if status and status != "all":
                if status == "failing" and item["status"] != "fail":
                    continue
                if status == "passing" and item["status"] != "pass":
                    continue
                if status == "invalid" and item["status"] != "invalid":
                    continue
            items.append(item)
        return {"tests": items}

    @app.get("/tests/{test_id}")
    def get_test(test_id: str, model: Optional[str] = Query(default=None)):
        try:
            raw = store.raw_test(test_id)
        except KeyError:
            raise HTTPException(404, f"unknown test {test_id!r}")
        payload = {"test": raw}
        if model:
            result = store.evaluate(test_id, model)
            payload["status"] = store.status_of(result)
            payload["explanation"] = result.explanation
            payload["matched_span"] = result.matched_span
        return payload

    @app.get("/tests/{test_id}/diff")
    def get_diff(test_id: str, model: str = Query(...)):
        try:
            return store.diff_payload(test_id, model)
        except KeyError:
            raise HTTPException(404, f"unknown test {test_id!r}")

    @app.patch("/tests/{test_id}")
    def patch_test(
        test_id: str,
        patch: dict = Body(...),
        model: Optional[str] = Query(default=None),
    ):
        try:
            store.update_test(test_id, patch)
        except KeyError:
            raise HTTPException(404, f"unknown test {test_id!r}")
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        return get_test(test_id, model)

    @app.get("/docs/{doc_id}/image")
    def get_image(doc_id: str):
        try:
            png = store.page_image(doc_id)
        except (FileNotFoundError, RasterizeError) as exc:
            raise HTTPException(404, str(exc))
        return Response(content=png, media_type="image/png")

    @app.get("/docs/{doc_id}/candidate/{model:path}")
    def get_candidate(doc_id: str, model: str):
        doc = store.candidates(model).get(doc_id)
        if doc is None:
            raise HTTPException(404, f"no candidate output for {doc_id!r} from {model!r}")
        return PlainTextResponse(doc.markdown)

    @app.post("/reviews")
    def post_review(body: ReviewBody):
        try:
            record = ReviewRecord(
                test_id=body.test_id,
                label=body.label,
                responsible=body.responsible,
                reviewer=body.reviewer,
                timestamp=body.timestamp or _now(),
                comment=body.comment,
            )
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        try:
            stored = store.record_review(record)
        except KeyError:
            raise HTTPException(404, f"unknown test {body.test_id!r}")
        return {"stored": stored, "review": record.to_json()}

    @app.get("/audit/summary")
    def get_audit_summary():
        return audit_summary(store.reviews).to_json()

    return app
