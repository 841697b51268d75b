"""`bench` command line: run suites, sample hard pages, drive converters,
serve the review backend."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from mdbench.gateway import (
    DEFAULT_RASTERIZER,
    ConvertConfig,
    PageRef,
    convert_corpus,
    sweep_dpi,
)
from mdbench.normalize import NormalizationProfile
from mdbench.runner import (
    TestSuiteError,
    aggregate,
    load_candidates,
    load_tests,
    render_report,
    run_suite,
)
from mdbench.sampler import rank_pages


@click.group()
def main() -> None:
    """Benchmark harness for PDF-to-Markdown converters."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")


def _format_for(path: Path, explicit: str | None) -> str:
    if explicit:
        return explicit
    suffix = path.suffix.lower()
    return {".csv": "csv", ".json": "json", ".md": "markdown-table"}.get(suffix, "csv")


@main.command()
@click.option("--tests", "tests_path", required=True, type=click.Path(exists=True))
@click.option("--candidates", "candidates_dir", required=True, type=click.Path(exists=True))
@click.option("--models", required=True, help="Comma-separated model ids.")
@click.option("--workers", default=8, show_default=True, type=click.IntRange(min=1))
@click.option("--agg", default="macro", show_default=True,
              type=click.Choice(["macro", "micro"]))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--format", "format_", default=None,
              type=click.Choice(["csv", "json", "markdown-table"]),
              help="Defaults to the --out extension.")
@click.option("--results-out", default=None, type=click.Path(),
              help="Also write per-test results as JSONL.")
def run(tests_path, candidates_dir, models, workers, agg, out_path, format_, results_out):
    """Evaluate every test against each model's outputs and write a report."""
    try:
        tests = load_tests(tests_path)
    except TestSuiteError as exc:
        raise click.ClickException(str(exc))
    model_ids = [m.strip() for m in models.split(",") if m.strip()]
    all_results = []
    candidates_by_model = {}
    for model_id in model_ids:
        docs = load_candidates(candidates_dir, model_id)
        candidates_by_model[model_id] = docs
        results = run_suite(tests, docs, model_id, workers=workers)
        all_results.extend(results)
        passed = sum(1 for r in results if r.passed)
        valid = sum(1 for r in results if not r.invalid)
        click.echo(f"{model_id}: {passed}/{valid} passed"
                   + (f" ({len(results) - valid} invalid)" if valid != len(results) else ""))
    report = aggregate(all_results, candidates_by_model, mode=agg)
    out = Path(out_path)
    out.write_text(render_report(report, _format_for(out, format_)), encoding="utf-8")
    click.echo(f"report written to {out}")
    if results_out:
        with open(results_out, "w", encoding="utf-8") as handle:
            for r in all_results:
                handle.write(json.dumps({
                    "test_id": r.test_id,
                    "model_id": r.model_id,
                    "passed": r.passed,
                    "invalid": r.invalid,
                    "explanation": r.explanation,
                    "matched_span": r.matched_span,
                }, ensure_ascii=False) + "\n")


@main.command()
@click.option("--a", "dir_a", required=True, type=click.Path(exists=True))
@click.option("--b", "dir_b", required=True, type=click.Path(exists=True))
@click.option("--k", required=True, type=click.IntRange(min=1))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--profile", "profile_json", default=None,
              help="Normalization profile as inline JSON.")
@click.option("--workers", default=4, show_default=True, type=click.IntRange(min=1))
def sample(dir_a, dir_b, k, out_path, profile_json, workers):
    """Rank pages by disagreement between two converters' output dirs."""
    profile = NormalizationProfile(markup_cleanup=True, unicode_harmonize=True)
    if profile_json:
        profile = NormalizationProfile.from_json(json.loads(profile_json))
    pages_a = {p.stem: p for p in Path(dir_a).glob("*.md")}
    pages_b = {p.stem: p for p in Path(dir_b).glob("*.md")}
    shared = sorted(set(pages_a) & set(pages_b))
    if not shared:
        raise click.ClickException("no common pages between the two directories")
    pairs = [
        (doc_id,
         pages_a[doc_id].read_text(encoding="utf-8"),
         pages_b[doc_id].read_text(encoding="utf-8"))
        for doc_id in shared
    ]
    records = rank_pages(pairs, k=k, profile=profile, workers=workers)
    with open(out_path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
    click.echo(f"{len(records)} page(s) written to {out_path}")


@main.command()
@click.option("--pdf-dir", required=True, type=click.Path(exists=True))
@click.option("--tests", "tests_path", required=True, type=click.Path(exists=True))
@click.option("--model", required=True)
@click.option("--endpoint", required=True)
@click.option("--dpi", default=100, show_default=True, type=click.IntRange(min=1))
@click.option("--workers", default=32, show_default=True, type=click.IntRange(min=1))
@click.option("--timeout", default=500.0, show_default=True, type=float)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--api-key-env", default="", help="Name of the env var holding the API key.")
@click.option("--max-retries", default=2, show_default=True, type=click.IntRange(min=0))
@click.option("--temperature", default=None, type=float)
@click.option("--reasoning-effort", default=None,
              type=click.Choice(["low", "medium", "high"]))
@click.option("--rasterizer-cmd", default=DEFAULT_RASTERIZER, show_default=True)
@click.option("--cache-dir", default=None, type=click.Path())
@click.option("--dpi-sweep", default=None,
              help="Comma-separated DPI list; writes one output dir per DPI.")
@click.option("--sweep-csv", default=None, type=click.Path(),
              help="Where to write the per-DPI timing CSV.")
def convert(pdf_dir, tests_path, model, endpoint, dpi, workers, timeout, out_dir,
            api_key_env, max_retries, temperature, reasoning_effort,
            rasterizer_cmd, cache_dir, dpi_sweep, sweep_csv):
    """Convert every page referenced by the test suite via an HTTP endpoint."""
    try:
        tests = load_tests(tests_path)
    except TestSuiteError as exc:
        raise click.ClickException(str(exc))
    pdf_root = Path(pdf_dir)
    seen = set()
    pages = []
    for raw in Path(tests_path).read_text(encoding="utf-8").splitlines():
        if not raw.strip():
            continue
        obj = json.loads(raw)
        key = (obj["pdf"], obj["page"])
        if key in seen:
            continue
        seen.add(key)
        pages.append(PageRef(pdf_root / obj["pdf"], obj["page"]))
    config = ConvertConfig(
        endpoint=endpoint,
        model=model,
        api_key_env=api_key_env,
        dpi=dpi,
        temperature=temperature,
        reasoning_effort=reasoning_effort,
        timeout_seconds=timeout,
        workers=workers,
        max_retries=max_retries,
    )
    from mdbench.gateway import _default_rasterize

    rasterize = _default_rasterize(rasterizer_cmd, cache_dir or Path(out_dir) / ".raster-cache")
    if dpi_sweep:
        dpis = [int(d) for d in dpi_sweep.split(",") if d.strip()]
        csv_text = sweep_dpi(pages, config, dpis, out_dir, rasterize)
        if sweep_csv:
            Path(sweep_csv).write_text(csv_text, encoding="utf-8")
            click.echo(f"sweep timings written to {sweep_csv}")
        else:
            click.echo(csv_text, nl=False)
        return
    docs = convert_corpus(pages, config, out_dir, rasterize)
    by_status: dict[str, int] = {}
    for doc in docs:
        by_status[doc.status] = by_status.get(doc.status, 0) + 1
    click.echo(f"{len(pages)} page(s): " + json.dumps(by_status, sort_keys=True))


@main.command("review-serve")
@click.option("--tests", "tests_path", required=True, type=click.Path(exists=True))
@click.option("--candidates", "candidates_dir", required=True, type=click.Path(exists=True))
@click.option("--port", default=8400, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--pdf-dir", default=None, type=click.Path(exists=True))
@click.option("--images-dir", default=None, type=click.Path(exists=True),
              help="Pre-rendered <doc_id>.png pages; used before rasterizing.")
@click.option("--edits", "edits_path", default=None, type=click.Path())
@click.option("--reviews", "reviews_path", default=None, type=click.Path())
@click.option("--rasterizer-cmd", default=DEFAULT_RASTERIZER, show_default=True)
def review_serve(tests_path, candidates_dir, port, host, pdf_dir, images_dir,
                 edits_path, reviews_path, rasterizer_cmd):
    """Serve the review backend for the browser UI."""
    import uvicorn

    from mdbench.review import ReviewStore, create_app

    try:
        store = ReviewStore(
            tests_path,
            candidates_dir,
            edits_path=edits_path,
            reviews_path=reviews_path,
            pdf_dir=pdf_dir,
            images_dir=images_dir,
            rasterizer_cmd=rasterizer_cmd,
        )
    except TestSuiteError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"serving {len(store.tests)} tests on http://{host}:{port}")
    uvicorn.run(create_app(store), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
