"""
Tests for the benchmark runner and reports
"""

import json
import shutil
import tempfile
import unittest
from pathlib import Path
import sys

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

import pandas as pd

from evaluation.report import TABLE_COLUMNS, BenchmarkReport
from evaluation.results import BenchmarkResult, Expectation
from evaluation.runner import discover, run_benchmarks

CORPUS = Path(__file__).parent.parent / "corpus"


def copy_program(src_dir: Path, name: str, dest: Path, expectation=None):
    dest.mkdir(parents=True, exist_ok=True)
    shutil.copy(src_dir / f"{name}.fpi", dest / f"{name}.fpi")
    sidecar = dest / f"{name}.expected.json"
    if expectation is None:
        shutil.copy(src_dir / f"{name}.expected.json", sidecar)
    else:
        sidecar.write_text(json.dumps(expectation), encoding="utf-8")


def result(program="ss", verdict="Valid", passed=True, seconds=1.0, **timings):
    return BenchmarkResult(program=program, category="safe", expected="Valid", verdict=verdict,
                           passed=passed, seconds=seconds, timings=timings)


class TestExpectation(unittest.TestCase):
    """Expected-verdict sidecars."""

    def test_reads_sidecar(self):
        expectation = Expectation.for_program(CORPUS / "limits" / "mod_branch.fpi")
        self.assertEqual(expectation.label(), "Inconclusive(BranchDiff)")

    def test_missing_sidecar(self):
        with tempfile.TemporaryDirectory() as tmp:
            program = Path(tmp) / "lonely.fpi"
            program.write_text("assume(true); x = 0; assert(x == 0);", encoding="utf-8")
            self.assertIsNone(Expectation.for_program(program))

    def test_matching(self):
        expectation = Expectation("Inconclusive", "PeelCount")
        self.assertTrue(expectation.matches({"verdict": "Inconclusive", "reason": "PeelCount"}))
        self.assertFalse(expectation.matches({"verdict": "Inconclusive", "reason": "DiffPre"}))
        self.assertTrue(Expectation("Valid").matches({"verdict": "Valid"}))

    def test_oracle_violation_fails_the_program(self):
        data = {"verdict": "Valid", "oracle": {"checked": [1], "violations": [{"N": 1}]}}
        row = BenchmarkResult.from_result(Path("corpus/safe/ss.fpi"), Expectation("Valid"), data)
        self.assertFalse(row.passed)
        self.assertEqual(row.oracle_violations, 1)


class TestBenchmarkReport(unittest.TestCase):
    """Summary tables and saved files."""

    def test_summary(self):
        report = BenchmarkReport([result(seconds=1.0, base=0.5),
                                  result("cubes", seconds=3.0, base=0.25),
                                  result("bad", verdict="Inconclusive(NoProgress)", passed=False)])
        summary = report.summary()
        self.assertEqual((summary["programs"], summary["passed"], summary["failed"]), (3, 2, 1))
        self.assertEqual(summary["seconds"]["total"], 5.0)
        self.assertEqual(summary["verdicts"]["Valid"], 2)
        self.assertEqual(report.stage_totals(), {"base": 0.75})
        self.assertFalse(report.all_passed)
        self.assertIn("FAIL safe/bad", report.to_table())

    def test_empty_report(self):
        report = BenchmarkReport([])
        self.assertFalse(report.all_passed)
        self.assertEqual(list(report.frame.columns), TABLE_COLUMNS)
        self.assertIn("(no programs)", report.to_table())

    def test_save(self):
        report = BenchmarkReport([result()])
        with tempfile.TemporaryDirectory() as tmp:
            paths = report.save(tmp, stem="run")
            frame = pd.read_csv(paths["csv"])
            self.assertEqual(list(frame["program"]), ["ss"])
            with open(paths["json"], encoding="utf-8") as f:
                data = json.load(f)
            self.assertEqual(data["summary"]["programs"], 1)
            self.assertEqual(data["results"][0]["verdict"], "Valid")


class TestBenchmarkRun(unittest.TestCase):
    """Running a small corpus end to end."""

    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.tmp, True)

    def test_small_corpus_passes(self):
        copy_program(CORPUS / "safe", "sum_const", self.tmp / "safe")
        copy_program(CORPUS / "unsafe", "sum_const_bad", self.tmp / "unsafe")
        copy_program(CORPUS / "limits", "square_bound", self.tmp / "limits")
        report = run_benchmarks(str(self.tmp), jobs=1, progress=False)
        self.assertEqual(len(report.results), 3)
        self.assertTrue(report.all_passed, report.to_table())
        self.assertEqual([r.category for r in report.results], ["limits", "safe", "unsafe"])

    def test_wrong_expectation_is_reported(self):
        copy_program(CORPUS / "safe", "x_eq_N", self.tmp, {"verdict": "CounterexampleFound"})
        report = run_benchmarks(str(self.tmp), jobs=1, progress=False)
        self.assertFalse(report.all_passed)
        self.assertEqual(report.failures()[0].verdict, "Valid")

    def test_syntax_error_is_isolated(self):
        (self.tmp / "broken.fpi").write_text("assume(true); x = ;", encoding="utf-8")
        copy_program(CORPUS / "safe", "init_const", self.tmp)
        report = run_benchmarks(str(self.tmp), jobs=1, progress=False)
        verdicts = {r.program: r.verdict for r in report.results}
        self.assertEqual(verdicts["broken"], "Error")
        self.assertEqual(verdicts["init_const"], "Valid")

    def test_empty_directory(self):
        with self.assertRaises(ValueError):
            run_benchmarks(str(self.tmp), progress=False)

    def test_missing_directory(self):
        with self.assertRaises(FileNotFoundError):
            discover(str(self.tmp / "nowhere"))


if __name__ == '__main__':
    unittest.main()
