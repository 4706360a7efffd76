"""
Tests for the verification pipeline
"""

import unittest
import tempfile
from unittest.mock import patch
import json
from pathlib import Path
import sys

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from fpi.config import Config
from fpi.driver import Verdict, VerdictKind
from fpi.lang.parser import parse_program
from fpi.pipeline import VerificationPipeline, verify_files

CORPUS = Path(__file__).parent.parent / "corpus"


class TestVerificationPipeline(unittest.TestCase):
    """Test cases for the verification pipeline."""

    def setUp(self):
        """Set up test fixtures."""
        self.pipeline = VerificationPipeline(verbose=False)

    def test_pipeline_initialization(self):
        """Settings fall back to the configuration."""
        pipeline = VerificationPipeline({"base_bound": 2}, verbose=False)
        self.assertEqual(pipeline.settings["base_bound"], 2)
        self.assertIn("timeout_ms", pipeline.settings)

    def test_verify_file_with_invalid_path(self):
        with self.assertRaises(FileNotFoundError):
            self.pipeline.verify_file("nonexistent_program.fpi")

    def test_valid_program_result(self):
        result = self.pipeline.verify_file(str(CORPUS / "safe" / "sum_const.fpi"))
        self.assertEqual(result["program"], "sum_const")
        self.assertEqual(result["verdict"], "Valid")
        self.assertEqual(result["oracle"]["violations"], [])
        self.assertGreater(result["oracle"]["checked"], 0)
        for key in ("rounds", "depth", "timings", "vc_scripts", "seconds"):
            self.assertIn(key, result)

    def test_counterexample_result(self):
        result = self.pipeline.verify_file(str(CORPUS / "unsafe" / "sum_const_bad.fpi"))
        self.assertEqual(result["verdict"], "CounterexampleFound")
        self.assertEqual(result["witness"]["N"], 1)
        self.assertIn("failing", result["witness"])

    def test_result_is_json_serializable(self):
        result = self.pipeline.verify_file(str(CORPUS / "unsafe" / "copy_bad.fpi"))
        self.assertEqual(json.loads(json.dumps(result))["verdict"], result["verdict"])

    def test_syntax_error_is_reported(self):
        result = self.pipeline.verify_text("assume(true);\nS = 0\nassert(S == 0);", "broken")
        self.assertEqual(result["verdict"], "Error")
        self.assertIn("ProgramSyntaxError", result["error"])

    def test_vc_scripts_and_cfg_are_written(self):
        with tempfile.TemporaryDirectory() as tmp:
            pipeline = VerificationPipeline(dump_vcs=f"{tmp}/vcs", dump_cfg=f"{tmp}/cfg", verbose=False)
            result = pipeline.verify_file(str(CORPUS / "safe" / "ss.fpi"))
            self.assertTrue(result["vc_scripts"])
            self.assertTrue(all(Path(p).exists() for p in result["vc_scripts"]))
            dot = Path(tmp) / "cfg" / "ss.dot"
            self.assertTrue(dot.read_text(encoding="utf-8").startswith("digraph cfg"))

    def test_scripts_default_to_a_run_directory(self):
        with tempfile.TemporaryDirectory() as tmp:
            with patch.object(Config, "RUNS_DIR", Path(tmp)):
                pipeline = VerificationPipeline({"keep_runs": True}, verbose=False)
                result = pipeline.verify_file(str(CORPUS / "safe" / "sum_const.fpi"))
            self.assertEqual(result["verdict"], "Valid")
            scripts = [Path(p) for p in result["vc_scripts"]]
            self.assertTrue(scripts)
            run_dir = scripts[0].parent
            self.assertEqual(run_dir.parent, Path(tmp))
            self.assertTrue(run_dir.name.endswith("_sum_const"))
            self.assertTrue(all(p.exists() and p.parent == run_dir for p in scripts))
            self.assertTrue(any("validity" in p.name for p in scripts))

    def test_runs_can_be_switched_off(self):
        with tempfile.TemporaryDirectory() as tmp:
            with patch.object(Config, "RUNS_DIR", Path(tmp)):
                pipeline = VerificationPipeline({"keep_runs": False}, verbose=False)
                result = pipeline.verify_file(str(CORPUS / "safe" / "sum_const.fpi"))
            self.assertEqual(result["vc_scripts"], [])
            self.assertEqual(list(Path(tmp).iterdir()), [])

    def test_verify_files(self):
        results = verify_files([str(CORPUS / "safe" / "init_const.fpi"),
                                str(CORPUS / "unsafe" / "init_const_bad.fpi")], verbose=False)
        self.assertEqual([r["verdict"] for r in results], ["Valid", "CounterexampleFound"])


class TestOracle(unittest.TestCase):
    """Concrete cross-check of Valid verdicts."""

    def setUp(self):
        self.pipeline = VerificationPipeline(oracle_samples=2, verbose=False)

    def test_wrong_valid_verdict_is_caught(self):
        triple = parse_program((CORPUS / "unsafe" / "sum_const_bad.fpi").read_text(encoding="utf-8"))
        report = self.pipeline.oracle_check(triple, Verdict(VerdictKind.VALID), max_n=3)
        self.assertEqual(report["checked"], 6)
        self.assertEqual(len(report["violations"]), 6)
        self.assertTrue(report["violations"][0]["failing"].startswith("S =="))

    def test_non_valid_verdicts_are_not_checked(self):
        triple = parse_program((CORPUS / "safe" / "ss.fpi").read_text(encoding="utf-8"))
        report = self.pipeline.oracle_check(triple, Verdict(VerdictKind.INCONCLUSIVE))
        self.assertEqual(report, {"checked": 0, "violations": []})


class TestInterpretFile(unittest.TestCase):
    """Concrete execution of program files."""

    def setUp(self):
        self.pipeline = VerificationPipeline(verbose=False)

    def test_sampled_input(self):
        result = self.pipeline.interpret_file(str(CORPUS / "safe" / "ss.fpi"), 3, seed=4)
        self.assertEqual(result["final"]["S"], 15)
        self.assertTrue(result["pre"])
        self.assertTrue(result["post"])

    def test_input_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            state = Path(tmp) / "state.json"
            state.write_text(json.dumps({"A": [2, 2]}), encoding="utf-8")
            result = self.pipeline.interpret_file(str(CORPUS / "safe" / "ss.fpi"), 2, str(state))
        self.assertEqual(result["initial"]["A"], [2, 2])
        self.assertFalse(result["pre"])


if __name__ == "__main__":
    unittest.main()
