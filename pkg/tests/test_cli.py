import json

from click.testing import CliRunner

from conftest import write_candidate, write_jsonl
from mdbench.cli import main


def suite_file(tmp_path):
    return write_jsonl(
        tmp_path / "tests.jsonl",
        [
            {"id": "a", "pdf": "doc.pdf", "page": 0, "category": "baseline",
             "type": "present", "text": "bonjour"},
            {"id": "b", "pdf": "doc.pdf", "page": 0, "category": "baseline",
             "type": "present", "text": "absent du texte"},
        ],
    )


class TestRunCommand:
    def test_report_csv(self, tmp_path):
        tests = suite_file(tmp_path)
        candidates = tmp_path / "out"
        write_candidate(candidates, "m1", "doc_p0", "bonjour le monde",
                        sidecar={"elapsed_seconds": 0.5, "dpi": 100, "status": "ok"})
        report = tmp_path / "report.csv"
        result = CliRunner().invoke(main, [
            "run", "--tests", str(tests), "--candidates", str(candidates),
            "--models", "m1", "--out", str(report),
        ])
        assert result.exit_code == 0, result.output
        assert "m1: 1/2 passed" in result.output
        lines = report.read_text().strip().split("\n")
        assert lines[1].startswith("m1,0.500")

    def test_results_jsonl(self, tmp_path):
        tests = suite_file(tmp_path)
        candidates = tmp_path / "out"
        write_candidate(candidates, "m1", "doc_p0", "bonjour")
        results_path = tmp_path / "results.jsonl"
        result = CliRunner().invoke(main, [
            "run", "--tests", str(tests), "--candidates", str(candidates),
            "--models", "m1", "--out", str(tmp_path / "r.json"),
            "--results-out", str(results_path),
        ])
        assert result.exit_code == 0, result.output
        rows = [json.loads(l) for l in results_path.read_text().splitlines()]
        assert {r["test_id"] for r in rows} == {"a", "b"}

    def test_bad_suite_is_a_clean_error(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "x"}\n', encoding="utf-8")
        (tmp_path / "cand").mkdir()
        result = CliRunner().invoke(main, [
            "run", "--tests", str(bad), "--candidates", str(tmp_path / "cand"),
            "--models", "m1", "--out", str(tmp_path / "r.csv"),
        ])
        assert result.exit_code != 0
        assert "line 1" in result.output


class TestConvertCommand:
    def test_converts_pages_referenced_by_suite(self, tmp_path):
        import sys

        from stub_server import StubEndpoint

        tests = suite_file(tmp_path)
        pdf_dir = tmp_path / "pdfs"
        pdf_dir.mkdir()
        (pdf_dir / "doc.pdf").write_bytes(b"%PDF-fake")
        raster_script = tmp_path / "raster.py"
        raster_script.write_text(
            "import sys, pathlib\n"
            "pathlib.Path(sys.argv[1]).write_bytes(b'\\x89PNG fake page')\n"
        )
        out_dir = tmp_path / "converted"
        with StubEndpoint() as stub:
            result = CliRunner().invoke(main, [
                "convert", "--pdf-dir", str(pdf_dir), "--tests", str(tests),
                "--model", "stub-model", "--endpoint", stub.url,
                "--dpi", "72", "--workers", "2", "--timeout", "5",
                "--out", str(out_dir),
                "--rasterizer-cmd", f"{sys.executable} {raster_script} {{out}}",
            ])
        assert result.exit_code == 0, result.output
        assert '"ok": 1' in result.output
        assert (out_dir / "stub-model" / "doc_p0.md").exists()
        sidecar = json.loads((out_dir / "stub-model" / "doc_p0.json").read_text())
        assert sidecar["status"] == "ok"
        assert sidecar["dpi"] == 72

    def test_dpi_sweep_writes_csv(self, tmp_path):
        import sys

        from stub_server import StubEndpoint

        tests = suite_file(tmp_path)
        pdf_dir = tmp_path / "pdfs"
        pdf_dir.mkdir()
        raster_script = tmp_path / "raster.py"
        raster_script.write_text(
            "import sys, pathlib\n"
            "pathlib.Path(sys.argv[1]).write_bytes(b'\\x89PNG fake page')\n"
        )
        sweep_csv = tmp_path / "sweep.csv"
        with StubEndpoint() as stub:
            result = CliRunner().invoke(main, [
                "convert", "--pdf-dir", str(pdf_dir), "--tests", str(tests),
                "--model", "stub-model", "--endpoint", stub.url,
                "--workers", "2", "--timeout", "5",
                "--out", str(tmp_path / "sweepout"),
                "--rasterizer-cmd", f"{sys.executable} {raster_script} {{out}}",
                "--dpi-sweep", "50,100", "--sweep-csv", str(sweep_csv),
            ])
        assert result.exit_code == 0, result.output
        lines = sweep_csv.read_text().strip().split("\n")
        assert lines[0] == "dpi,pages_ok,mean_seconds_per_page"
        assert len(lines) == 3


class TestSampleCommand:
    def test_shortlist(self, tmp_path):
        for model, text in (("a", "identique"), ("b", "différent")):
            write_candidate(tmp_path, model, "p1", text)
        write_candidate(tmp_path, "a", "p2", "pareil")
        write_candidate(tmp_path, "b", "p2", "pareil")
        out = tmp_path / "shortlist.jsonl"
        result = CliRunner().invoke(main, [
            "sample", "--a", str(tmp_path / "a"), "--b", str(tmp_path / "b"),
            "--k", "1", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        record = json.loads(out.read_text().splitlines()[0])
        assert record["doc_id"] == "p1"
        assert record["score"] > 0

    def test_disjoint_dirs_error(self, tmp_path):
        write_candidate(tmp_path, "a", "p1", "x")
        write_candidate(tmp_path, "b", "p2", "y")
        result = CliRunner().invoke(main, [
            "sample", "--a", str(tmp_path / "a"), "--b", str(tmp_path / "b"),
            "--k", "1", "--out", str(tmp_path / "s.jsonl"),
        ])
        assert result.exit_code != 0
        assert "no common pages" in result.output
