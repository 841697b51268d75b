import json
from pathlib import Path

import pytest

from mdbench.normalize import NormalizationProfile


@pytest.fixture
def profile_all() -> NormalizationProfile:
    return NormalizationProfile(
        markup_cleanup=True,
        unicode_harmonize=True,
        ascii_projection=True,
        alnum_filter=True,
        drop_intraline_spaces=True,
        drop_linebreaks=True,
    )


def write_jsonl(path: Path, records: list[dict]) -> Path:
    path.write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records),
        encoding="utf-8",
    )
    return path


def write_candidate(
    root: Path,
    model: str,
    doc_id: str,
    markdown: str,
    sidecar: dict | None = None,
) -> Path:
    model_dir = root / model
    model_dir.mkdir(parents=True, exist_ok=True)
    md = model_dir / f"{doc_id}.md"
    md.write_text(markdown, encoding="utf-8")
    if sidecar is not None:
        (model_dir / f"{doc_id}.json").write_text(json.dumps(sidecar), encoding="utf-8")
    return md
