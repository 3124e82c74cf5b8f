import io
import json
import subprocess
import sys

import pytest

from chessruns.cli import SCHEMA_VERSION, main
from conftest import DATA

STUB = str(DATA / "synthetic_63_stub.txt")
GAME63 = str(DATA / "synthetic_63.pgn")


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def records(text):
    rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    assert all(r["schema_version"] == SCHEMA_VERSION for r in rows)
    return rows


class TestProb:
    def test_exact_tail(self):
        code, out, _ = run("prob", "exact", "--n", "63", "--k", "18", "--p", "0.5", "--tail")
        rec, summary = records(out)
        assert code == 0 and rec["results"]["value"] == pytest.approx(8.96439123618531e-05, rel=1e-12)
        assert summary["record"] == "summary" and summary["inputs"]["n"] == 63

    def test_imbed_series_from_stdin(self, monkeypatch):
        monkeypatch.setattr(sys, "stdin", io.StringIO("0.5, 0.5\n0.5\n"))
        code, out, _ = run("prob", "imbed", "--p-series", "-", "--k", "2", "--tail")
        assert code == 0 and records(out)[0]["results"]["value"] == 0.375

    def test_feller(self):
        code, out, _ = run("prob", "feller", "--n", "5540", "--k", "18", "--p", "0.5", "--tail")
        assert 0.0100 <= records(out)[0]["results"]["value"] <= 0.0110

    def test_pmf_and_density(self):
        code, out, _ = run("prob", "imbed", "--n", "20", "--p", "0.5", "--pmf", "--bandwidth", "0.7")
        assert code == 0
        kinds = {r["record"] for r in records(out)}
        assert {"summary"} < kinds and len(kinds) >= 2

    def test_csv_summary_on_stderr(self):
        code, out, err = run("prob", "exact", "--n", "63", "--k", "18", "--p", "0.5", "--tail", "--format", "csv")
        assert code == 0
        assert out.splitlines()[0] == "method,quantity,record,value"
        assert json.loads(err.splitlines()[-1])["record"] == "summary"

    @pytest.mark.parametrize("argv", [
        ("prob", "exact", "--n", "10", "--p", "0.5"),            # k missing
        ("prob", "exact", "--n", "10", "--k", "3", "--p", "1.5"),
        ("prob", "feller", "--n", "10", "--k", "1", "--p", "0.5", "--tail"),
        ("prob", "nope",),
        ("runs",),
    ])
    def test_usage_errors(self, argv):
        with pytest.raises(SystemExit) as exc:
            code = main(list(argv), stdout=io.StringIO(), stderr=io.StringIO())
            raise SystemExit(code)
        assert exc.value.code == 2


class TestRunsAndSearch:
    def test_runs_report_count(self):
        code, out, _ = run("runs", str(DATA / "random_playouts.pgn"), "--adjust", "holm")
        rows = records(out)
        assert code == 0 and sum(r["record"] == "report" for r in rows) == 32

    def test_empty_input(self, tmp_path):
        empty = tmp_path / "empty.pgn"
        empty.write_text("")
        code, out, _ = run("runs", str(empty))
        (summary,) = records(out)
        assert code == 0 and summary["results"]["games"] == 0

    def test_missing_file(self, tmp_path):
        code, _, err = run("runs", str(tmp_path / "nope.pgn"))
        assert code == 1 and "nope.pgn" in err

    def test_search_hits_and_warning(self):
        code, out, _ = run("search", str(DATA / "search_corpus.pgn"), "--opposite-bishops", "--no-knights-majors",
                           "--pawns", "3:4", "--min-avg-elo", "2500", "--min-fullmoves", "80")
        rows = records(out)
        hits = [r["results"]["first_matching_ply"] for r in rows if r["record"] == "hit"]
        assert hits == [1, 3, 2, 4]
        assert code == 3 and any("game 10" in w for w in rows[-1]["warnings"])

    def test_search_config_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"criteria": {"require_opposite_bishops": True, "pawn_range": [3, 4]}}))
        code, out, _ = run("search", str(DATA / "search_corpus.pgn"), "--config", str(cfg))
        assert code in (0, 3) and any(r["record"] == "hit" for r in records(out))

    def test_bad_pawn_range(self):
        code, _, err = run("search", str(DATA / "search_corpus.pgn"), "--pawns", "5:3")
        assert code == 2 and err


class TestQuality:
    def test_stub_run(self):
        code, out, _ = run("quality", GAME63, "--stub-engine", STUB, "--run-span", "21:38")
        summary = records(out)[-1]
        assert code == 0
        assert (summary["results"]["n_run"], summary["results"]["n_nonrun"]) == (18, 45)

    def test_bytes_stable_across_processes_and_jobs(self):
        argv = [sys.executable, "-m", "chessruns", "quality", GAME63, "--stub-engine", STUB,
                "--run-span", "21:38", "--window", "9"]
        a = subprocess.run(argv, capture_output=True, check=True).stdout
        b = subprocess.run(argv + ["--jobs", "4"], capture_output=True, check=True).stdout
        assert a == b and b'"n_nonrun": 18' in a

    def test_missing_engine_hint(self, monkeypatch):
        monkeypatch.delenv("CHESSRUNS_ENGINE", raising=False)
        code, _, err = run("quality", GAME63, "--run-span", "21:38")
        assert code == 2 and "CHESSRUNS_ENGINE" in err

    def test_real_engine_needs_depth(self):
        code, _, err = run("quality", GAME63, "--engine", sys.executable, "--run-span", "21:38")
        assert code == 2 and "depth" in err
