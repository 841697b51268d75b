"""Shortlist hard pages by disagreement between two converters.

Two converters transcribe the same page; the normalized edit distance
between their outputs is a cheap proxy for difficulty.  Pages where the
outputs diverge most get reviewed and turned into tests first.  This
biases toward pages where converters are unstable, not toward any
absolute notion of difficulty.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from mdbench.matching import edit_distance
from mdbench.normalize import NormalizationProfile, normalize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DisagreementRecord:
    doc_id: str
    score: float
    len_a: int
    len_b: int

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "score": round(self.score, 6),
            "len_a": self.len_a,
            "len_b": self.len_b,
        }


def disagreement(out_a: str, out_b: str, profile: NormalizationProfile) -> float:
    """Length-normalized edit distance between two outputs, in [0, 1]."""
    a = normalize(out_a, profile)
    b = normalize(out_b, profile)
    return edit_distance(a, b) / max(len(a), len(b), 1)


def rank_pages(
    pairs: list[tuple[str, str, str]],
    k: int,
    profile: NormalizationProfile,
    workers: int = 1,
) -> list[DisagreementRecord]:
    """Top-k pages by descending disagreement; ties break on doc_id.

    ``pairs`` holds (doc_id, output_a, output_b) triples.  The result is
    deterministic for any worker count and input order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    def score(pair: tuple[str, str, str]) -> DisagreementRecord:
        doc_id, out_a, out_b = pair
        a = normalize(out_a, profile)
        b = normalize(out_b, profile)
        dist = edit_distance(a, b)
        return DisagreementRecord(
            doc_id=doc_id,
            score=dist / max(len(a), len(b), 1),
            len_a=len(a),
            len_b=len(b),
        )

    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(score, pairs))
    records.sort(key=lambda r: (-r.score, r.doc_id))
    if k > len(records):
        logger.warning("requested top %d of only %d pages", k, len(records))
    return records[:k]
