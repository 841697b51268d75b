"""Benchmark harness for PDF-to-Markdown converters.

Scores converter outputs with small machine-checkable unit tests (text
presence/absence, reading order, local table structure) under per-test
text normalization, ranks hard pages by converter disagreement, drives
converters over HTTP, and serves a review backend for human verification
of tests and failures.
"""

from mdbench.normalize import NormalizationProfile, normalize
from mdbench.checks import UnitTest, TestResult, run_test

__version__ = "0.1.0"

__all__ = [
    "NormalizationProfile",
    "normalize",
    "UnitTest",
    "TestResult",
    "run_test",
    "__version__",
]
