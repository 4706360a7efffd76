"""
Tests for the command-line interface
"""

import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest.mock import patch
import sys

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

import main as cli
from fpi.config import Config

CORPUS = Path(__file__).parent.parent / "corpus"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.main(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestExitCodes(unittest.TestCase):
    """Verdicts map to process exit codes."""

    def setUp(self):
        patcher = patch.object(Config, "SOLVER_PATH", None)
        patcher.start()
        self.addCleanup(patcher.stop)

    def test_valid(self):
        code, out, _ = run("verify", str(CORPUS / "safe" / "sum_const.fpi"))
        self.assertEqual(code, 0)
        self.assertIn("Verdict: Valid", out)

    def test_counterexample(self):
        code, out, _ = run("verify", str(CORPUS / "unsafe" / "copy_bad.fpi"))
        self.assertEqual(code, 1)
        self.assertIn("Counterexample:", out)

    def test_inconclusive(self):
        code, _, _ = run("verify", str(CORPUS / "limits" / "square_bound.fpi"))
        self.assertEqual(code, 2)

    def test_missing_file(self):
        code, _, err = run("verify", "no_such_program.fpi")
        self.assertEqual(code, 3)
        self.assertIn("File not found", err)

    def test_syntax_error(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "broken.fpi"
            path.write_text("assume(true); x = ;", encoding="utf-8")
            code, _, _ = run("verify", str(path))
        self.assertEqual(code, 3)

    def test_bad_flag(self):
        code, _, _ = run("verify", str(CORPUS / "safe" / "ss.fpi"), "--base-bound", "9")
        self.assertEqual(code, 3)

    def test_no_command(self):
        code, _, _ = run()
        self.assertEqual(code, 3)


class TestCommands(unittest.TestCase):
    """Subcommand output."""

    def setUp(self):
        patcher = patch.object(Config, "SOLVER_PATH", None)
        patcher.start()
        self.addCleanup(patcher.stop)

    def test_json_verdict(self):
        with tempfile.TemporaryDirectory() as tmp:
            saved = Path(tmp) / "verdict.json"
            code, out, _ = run("verify", str(CORPUS / "safe" / "init_const.fpi"), "--json",
                               "--output", str(saved))
            self.assertEqual(code, 0)
            self.assertEqual(json.loads(out)["verdict"], "Valid")
            self.assertEqual(json.loads(saved.read_text(encoding="utf-8"))["verdict"], "Valid")

    def test_interpret(self):
        code, out, _ = run("interpret", str(CORPUS / "safe" / "ss.fpi"), "--n", "3", "--seed", "1")
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)["final"]["S"], 15)

    def test_interpret_needs_positive_n(self):
        code, _, _ = run("interpret", str(CORPUS / "safe" / "ss.fpi"), "--n", "0")
        self.assertEqual(code, 3)

    def test_config(self):
        code, out, _ = run("config")
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)["solver"], "z3 (in-process)")

    def test_invalid_configuration_blocks_verify(self):
        with patch.object(Config, "BASE_BOUND", 0):
            code, _, err = run("verify", str(CORPUS / "safe" / "ss.fpi"))
        self.assertEqual(code, 3)
        self.assertIn("Configuration error", err)

    def test_bench(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, out, _ = run("bench", str(CORPUS / "limits"), "--quiet", "--output", tmp)
            self.assertEqual(code, 0)
            self.assertTrue((Path(tmp) / "bench.csv").exists())
        self.assertIn("mod_branch", out)


if __name__ == '__main__':
    unittest.main()
