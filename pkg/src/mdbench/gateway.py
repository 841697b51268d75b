"""Drive converters over a corpus of page images.

Converters are OpenAI-compatible vision chat-completion endpoints (remote
or local).  Pages are rasterized by a configurable external command,
cached on disk, then fanned out to the endpoint with bounded concurrency.
Timeouts and errors are recorded per page, never raised: a page that
times out stays in the output with empty markdown so the runner can
penalize it.  Runs are restart-safe; pages already converted are skipped.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import shlex
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import requests

from mdbench.runner import (
    STATUS_ERROR,
    STATUS_OK,
    STATUS_TIMEOUT,
    CandidateDoc,
    doc_id_for,
)

logger = logging.getLogger(__name__)

DEFAULT_PROMPT = (
    "Convert this page to Markdown. Transcribe all text in reading order, "
    "including text inside figures and charts. Render every table as an "
    "HTML <table> element. Output only the Markdown."
)

DEFAULT_RASTERIZER = "pdftoppm -png -r {dpi} -f {page1} -l {page1} -singlefile {pdf} {outstem}"


class RasterizeError(RuntimeError):
    """The external rasterizer failed for one page."""


@dataclass
class ConvertConfig:
    endpoint: str
    model: str
    api_key_env: str = ""
    prompt_template: str = DEFAULT_PROMPT
    dpi: int = 100
    temperature: Optional[float] = None
    reasoning_effort: Optional[str] = None
    timeout_seconds: float = 500.0
    workers: int = 32
    max_retries: int = 2
    retry_backoff: float = 1.0

    def __post_init__(self) -> None:
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be > 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.dpi < 1:
            raise ValueError("dpi must be >= 1")
        if self.reasoning_effort not in (None, "low", "medium", "high"):
            raise ValueError("reasoning_effort must be low, medium or high")


@dataclass(frozen=True)
class PageRef:
    pdf_path: Path
    page_index: int

    @property
    def doc_id(self) -> str:
        return doc_id_for(str(self.pdf_path), self.page_index)


def rasterize_page(
    pdf_path: str | Path,
    page_index: int,
    dpi: int,
    command_template: str = DEFAULT_RASTERIZER,
    cache_dir: str | Path = ".raster-cache",
) -> bytes:
    """PNG bytes for one page, rendered by the configured external command.

    Results are cached on disk keyed by (pdf, page, dpi); repeated calls
    never re-invoke the command.  The template gets ``{pdf}``, ``{page}``
    (0-based), ``{page1}`` (1-based), ``{dpi}``, ``{out}`` and
    ``{outstem}`` (``{out}`` without the .png suffix) substituted per
    token.
    """
    pdf_path = Path(pdf_path)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    cached = cache_dir / f"{pdf_path.stem}_p{page_index}_dpi{dpi}.png"
    if cached.exists():
        return cached.read_bytes()
    out_tmp = cached.with_suffix(".tmp.png")
    subs = {
        "pdf": str(pdf_path),
        "page": str(page_index),
        "page1": str(page_index + 1),
        "dpi": str(dpi),
        "out": str(out_tmp),
        "outstem": str(out_tmp)[: -len(".png")],
    }
    argv = [token.format(**subs) for token in shlex.split(command_template)]
    try:
        proc = subprocess.run(argv, capture_output=True, timeout=120)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise RasterizeError(f"{pdf_path} p{page_index}: {exc}") from exc
    if proc.returncode != 0:
        detail = proc.stderr.decode("utf-8", "replace").strip()
        raise RasterizeError(f"{pdf_path} p{page_index}: rasterizer exited "
                             f"{proc.returncode}: {detail}")
    if not out_tmp.exists():
        raise RasterizeError(f"{pdf_path} p{page_index}: rasterizer wrote no output")
    out_tmp.replace(cached)
    return cached.read_bytes()


def _completions_url(endpoint: str) -> str:
    if "chat/completions" in endpoint:
        return endpoint
    return endpoint.rstrip("/") + "/chat/completions"


def _request_payload(image: bytes, config: ConvertConfig) -> dict:
    data_url = "data:image/png;base64," + base64.b64encode(image).decode("ascii")
    payload: dict = {
        "model": config.model,
        "messages": [
            {
                "role": "user",
                "content": [
                    {"type": "text", "text": config.prompt_template},
                    {"type": "image_url", "image_url": {"url": data_url}},
                ],
            }
        ],
    }
    if config.temperature is not None:
        payload["temperature"] = config.temperature
    if config.reasoning_effort is not None:
        payload["reasoning_effort"] = config.reasoning_effort
    return payload


def convert_page(image: bytes, config: ConvertConfig, doc_id: str = "") -> CandidateDoc:
    """One chat-completion round trip; failures become statuses, not raises.

    Timeouts yield status ``timeout`` with empty markdown.  Other HTTP
    failures are retried up to ``max_retries`` times with exponential
    backoff, then yield status ``error``.
    """
    url = _completions_url(config.endpoint)
    headers = {"Content-Type": "application/json"}
    if config.api_key_env:
        key = os.environ.get(config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
    payload = _request_payload(image, config)
    started = time.perf_counter()

    def doc(markdown: str, status: str) -> CandidateDoc:
        return CandidateDoc(
            doc_id=doc_id,
            model_id=config.model,
            markdown=markdown,
            elapsed_seconds=time.perf_counter() - started,
            dpi=config.dpi,
            status=status,
        )

    last_error = ""
    for attempt in range(config.max_retries + 1):
        if attempt:
            time.sleep(config.retry_backoff * (2 ** (attempt - 1)))
        try:
            response = requests.post(
                url, json=payload, headers=headers, timeout=config.timeout_seconds
            )
        except requests.Timeout:
            logger.warning("%s: timed out after %.0fs", doc_id, config.timeout_seconds)
            return doc("", STATUS_TIMEOUT)
        except requests.RequestException as exc:
            last_error = str(exc)
            continue
        if response.status_code != 200:
            last_error = f"HTTP {response.status_code}"
            continue
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError) as exc:
            last_error = f"bad response body: {exc}"
            continue
        if not content:
            last_error = "empty completion"
            continue
        return doc(content, STATUS_OK)
    logger.warning("%s: giving up after %d attempts: %s",
                   doc_id, config.max_retries + 1, last_error)
    return doc("", STATUS_ERROR)


RasterizeFn = Callable[[Path, int, int], bytes]


def _default_rasterize(
    command_template: str, cache_dir: str | Path
) -> RasterizeFn:
    def run(pdf_path: Path, page_index: int, dpi: int) -> bytes:
        return rasterize_page(pdf_path, page_index, dpi, command_template, cache_dir)

    return run


def _sidecar(doc: CandidateDoc, config: ConvertConfig, error: str = "") -> dict:
    meta = {
        "elapsed_seconds": doc.elapsed_seconds,
        "dpi": config.dpi,
        "status": doc.status,
        "model": config.model,
        "prompt_sha1": hashlib.sha1(config.prompt_template.encode()).hexdigest()[:12],
    }
    if error:
        meta["error"] = error
    return meta


def convert_corpus(
    pages: Sequence[PageRef],
    config: ConvertConfig,
    out_root: str | Path,
    rasterize: Optional[RasterizeFn] = None,
) -> list[CandidateDoc]:
    """Convert every page, writing the runner's candidate layout.

    Output lands in ``out_root/<model>/<doc_id>.md`` plus a JSON sidecar.
    At most ``config.workers`` requests are in flight at once.  Pages
    whose sidecar already says ``ok`` are skipped, so interrupted runs
    resume where they left off; failed pages are retried on rerun.
    """
    if rasterize is None:
        rasterize = _default_rasterize(DEFAULT_RASTERIZER, Path(out_root) / ".raster-cache")
    out_dir = Path(out_root) / config.model
    out_dir.mkdir(parents=True, exist_ok=True)

    def done_already(page: PageRef) -> bool:
        md = out_dir / f"{page.doc_id}.md"
        sidecar = out_dir / f"{page.doc_id}.json"
        if not (md.exists() and sidecar.exists()):
            return False
        try:
            return json.loads(sidecar.read_text(encoding="utf-8")).get("status") == STATUS_OK
        except (OSError, json.JSONDecodeError):
            return False

    def process(page: PageRef) -> CandidateDoc:
        error = ""
        try:
            image = rasterize(page.pdf_path, page.page_index, config.dpi)
        except RasterizeError as exc:
            error = str(exc)
            logger.warning("rasterize failed: %s", error)
            doc = CandidateDoc(
                doc_id=page.doc_id,
                model_id=config.model,
                markdown="",
                elapsed_seconds=None,
                dpi=config.dpi,
                status=STATUS_ERROR,
            )
        else:
            doc = convert_page(image, config, doc_id=page.doc_id)
        (out_dir / f"{doc.doc_id}.md").write_text(doc.markdown, encoding="utf-8")
        (out_dir / f"{doc.doc_id}.json").write_text(
            json.dumps(_sidecar(doc, config, error), sort_keys=True), encoding="utf-8"
        )
        return doc

    pending = [p for p in pages if not done_already(p)]
    skipped = len(pages) - len(pending)
    if skipped:
        logger.info("resuming: %d page(s) already converted", skipped)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(process, pending))


def sweep_dpi(
    pages: Sequence[PageRef],
    config: ConvertConfig,
    dpis: Iterable[int],
    out_root: str | Path,
    rasterize: Optional[RasterizeFn] = None,
) -> str:
    """Convert the corpus once per DPI; returns a timing CSV for plotting."""
    rows = ["dpi,pages_ok,mean_seconds_per_page"]
    for dpi in dpis:
        cfg = ConvertConfig(**{**config.__dict__, "dpi": dpi})
        docs = convert_corpus(pages, cfg, Path(out_root) / f"dpi_{dpi}", rasterize)
        ok = [d for d in docs if d.status == STATUS_OK and d.elapsed_seconds]
        mean = sum(d.elapsed_seconds for d in ok) / len(ok) if ok else ""
        rows.append(f"{dpi},{len(ok)},{mean if mean == '' else f'{mean:.3f}'}")
    return "\n".join(rows) + "\n"
