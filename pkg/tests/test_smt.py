"""
Tests for verification-condition encoding, the solver session and counterexamples
"""

import shutil
import tempfile
import unittest
from pathlib import Path
import sys

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

import z3

from fpi.errors import NotSatisfiable
from fpi.interpreter import evaluate_formula, interpret
from fpi.lang.parser import parse_formula, parse_program
from fpi.smt.counterexample import extract_counterexample
from fpi.smt.encoder import encode_bounded_triple, encode_inductive_triple
from fpi.smt.solver import (
    Answer, SolverSession, _declare_missing, _model_from_pairs, _value_terms, parse_sexpr,
)

CORPUS = Path(__file__).parent.parent / "corpus"


def load(name: str, category: str = "safe"):
    return parse_program((CORPUS / category / f"{name}.fpi").read_text(encoding="utf-8"))


class TestBoundedQueries(unittest.TestCase):
    """Base-case queries at a concrete N."""

    def setUp(self):
        self.session = SolverSession()
        self.addCleanup(self.session.__exit__, None, None, None)

    def test_safe_programs_are_unsat(self):
        for name in ("ss", "cubes", "max", "zerosum4"):
            for n in (1, 2, 3):
                with self.subTest(program=name, N=n):
                    verdict = self.session.check(encode_bounded_triple(load(name), n))
                    self.assertTrue(verdict.is_unsat)

    def test_unsafe_program_gives_replayable_witness(self):
        triple = load("copy_bad", "unsafe")
        verdict = self.session.check(encode_bounded_triple(triple, 1), want_model=True)
        self.assertTrue(verdict.is_sat)
        witness = extract_counterexample(verdict, triple, 1)
        self.assertEqual(witness.n, 1)
        self.assertTrue(evaluate_formula(triple.pre, witness.initial))
        self.assertFalse(evaluate_formula(triple.post, interpret(triple.prog, witness.initial)))
        self.assertEqual(witness.to_dict()["N"], 1)
        self.assertIn("B", witness.to_dict()["final"])

    def test_scalar_counterexample(self):
        triple = load("sum_const_bad", "unsafe")
        verdict = self.session.check(encode_bounded_triple(triple, 2), want_model=True)
        witness = extract_counterexample(verdict, triple, 2)
        self.assertEqual(witness.final.scalars["S"], 6)

    def test_no_model_for_unsat(self):
        triple = load("sum_const")
        verdict = self.session.check(encode_bounded_triple(triple, 2), want_model=True)
        with self.assertRaises(NotSatisfiable):
            extract_counterexample(verdict, triple, 2)


class TestSymbolicQueries(unittest.TestCase):
    """Queries over a symbolic N."""

    def setUp(self):
        self.session = SolverSession()
        self.addCleanup(self.session.__exit__, None, None, None)

    def test_validity(self):
        hyp = parse_formula("forall i in [0, N) :: A[i] == 1")
        self.assertTrue(self.session.valid([hyp], parse_formula("A[N - 1] == 1"), lower=1))
        self.assertFalse(self.session.valid([hyp], parse_formula("A[N] == 1"), lower=1))

    def test_satisfiable(self):
        self.assertTrue(self.session.satisfiable([parse_formula("x > N").pred], lower=1))
        self.assertFalse(self.session.satisfiable([parse_formula("N < 1").pred], lower=1))

    def test_inductive_difference_step(self):
        prog = parse_program("assume(true); S = S + 3; assert(true);").prog
        query = encode_inductive_triple([parse_formula("S_Nm1 == 3 * (N - 1)")], prog,
                                        parse_formula("S == 3 * N"), {"S"}, lambda x: x + "_Nm1", 1)
        self.assertTrue(self.session.check(query).is_unsat)
        bad = encode_inductive_triple([parse_formula("S_Nm1 == 0")], prog,
                                      parse_formula("S == 3 * N"), {"S"}, lambda x: x + "_Nm1", 1)
        self.assertTrue(self.session.check(bad).is_sat)

    def test_scripts_are_dumped(self):
        with tempfile.TemporaryDirectory() as tmp:
            with SolverSession(dump_dir=tmp) as session:
                session.check(encode_bounded_triple(load("ss"), 1), want_model=False)
                self.assertEqual(len(session.script_paths), 1)
                text = Path(session.script_paths[0]).read_text(encoding="utf-8")
            self.assertIn("(check-sat)", text)
            self.assertIn("; answer: unsat", text)

    def test_helper_queries_are_dumped(self):
        hyp = parse_formula("forall i in [0, N) :: A[i] == 1")
        with tempfile.TemporaryDirectory() as tmp:
            with SolverSession(dump_dir=tmp) as session:
                self.assertTrue(session.valid([hyp], parse_formula("A[N - 1] == 1"), lower=1))
                self.assertTrue(session.satisfiable([parse_formula("x > N").pred], lower=1))
                names = [Path(p).name for p in session.script_paths]
            self.assertEqual(len(names), 2)
            self.assertIn("validity", names[0])
            self.assertIn("sat", names[1])


class TestSolverText(unittest.TestCase):
    """Parsing external solver output."""

    def test_answers(self):
        self.assertEqual(Answer.from_text("sat\n"), Answer.SAT)
        self.assertEqual(Answer.from_text("unsat"), Answer.UNSAT)
        self.assertEqual(Answer.from_text("timeout"), Answer.UNKNOWN)

    def test_sexpr(self):
        self.assertEqual(parse_sexpr("((x 3) (y (- 2)))"), [["x", "3"], ["y", ["-", "2"]]])

    def test_values_match_request_order(self):
        keys = [("S", None), ("A", 0), ("A", 1)]
        pairs = parse_sexpr("((S 6) ((select A 0) 3) ((select A 1) (- 1)))")
        self.assertEqual(_model_from_pairs(keys, pairs), {"S": 6, "A": {0: 3, 1: -1}})

    def test_error_reply_is_not_a_model(self):
        keys = [("S", None), ("A", 0), ("A", 1)]
        with self.assertRaises(ValueError):
            _model_from_pairs(keys, parse_sexpr('(error "line 15 column 12: unknown constant S")'))

    def test_unmentioned_model_constants_are_declared(self):
        array = z3.Array("A", z3.IntSort(), z3.IntSort())
        script = "(declare-fun A () (Array Int Int))\n(assert (= (select A 0) 1))\n"
        terms = [z3.Int("S"), z3.Select(array, 0), z3.Select(array, 1)]
        self.assertEqual(_declare_missing(script, terms), "(declare-fun S () Int)")

    def test_written_before_read_scalar_gets_a_value_term(self):
        query = encode_bounded_triple(load("sum_const_bad", "unsafe"), 2)
        keys, terms = _value_terms(query)
        self.assertIn(("S", None), keys)
        self.assertEqual(len(keys), len(terms))


@unittest.skipUnless(shutil.which("z3"), "z3 executable not on PATH")
class TestExternalSolver(unittest.TestCase):
    """One z3 process per session, queries scoped with push/pop."""

    def setUp(self):
        self.session = SolverSession(shutil.which("z3"))
        self.addCleanup(self.session.__exit__, None, None, None)

    def test_unsafe_program_gives_replayable_witness(self):
        triple = load("sum_const_bad", "unsafe")
        verdict = self.session.check(encode_bounded_triple(triple, 2), want_model=True)
        self.assertTrue(verdict.is_sat, verdict.reason)
        witness = extract_counterexample(verdict, triple, 2)
        self.assertEqual(witness.final.scalars["S"], 6)

    def test_valid_query_and_bounded_safety(self):
        hyp = parse_formula("forall i in [0, N) :: A[i] == 1")
        self.assertTrue(self.session.valid([hyp], parse_formula("A[N - 1] == 1"), lower=1))
        self.assertFalse(self.session.valid([hyp], parse_formula("A[N] == 1"), lower=1))
        self.assertTrue(self.session.check(encode_bounded_triple(load("ss"), 2)).is_unsat)

    def test_process_is_reused_and_closed(self):
        self.session.check(encode_bounded_triple(load("ss"), 1))
        pid = self.session.backend.process.pid
        verdict = self.session.check(encode_bounded_triple(load("copy_bad", "unsafe"), 1),
                                     want_model=True)
        self.assertTrue(verdict.is_sat)
        self.assertEqual(self.session.backend.process.pid, pid)
        self.session.__exit__(None, None, None)
        self.assertIsNone(self.session.backend.process)


if __name__ == '__main__':
    unittest.main()
