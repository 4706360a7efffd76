"""
Tests for the program language: parser, printer, polynomials and substitution
"""

import unittest
from pathlib import Path
import sys

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from hypothesis import given, settings, strategies as st

from fpi.errors import GrammarViolation, ProgramSyntaxError
from fpi.interpreter import ProgState, evaluate_expr
from fpi.lang.ast import (
    Assign, BinOp, Const, Counter, For, Forall, If, Neg, Param, QF, Read, Rel, Store, Var,
    n_minus, written_names,
)
from fpi.lang.parser import parse_expr, parse_formula, parse_program
from fpi.lang.poly import decide, same_value, simplify_bool, simplify_expr, to_poly
from fpi.lang.printer import format_expr, format_triple
from fpi.lang.subst import rename_names, substitute_bounds, substitute_param

CORPUS = Path(__file__).parent.parent / "corpus"

SS_SOURCE = (CORPUS / "safe" / "ss.fpi").read_text(encoding="utf-8")


class TestParser(unittest.TestCase):
    """Parsing annotated programs."""

    def test_parse_ss_program(self):
        triple = parse_program(SS_SOURCE)
        self.assertIsInstance(triple.pre, Forall)
        self.assertEqual(triple.pre.var, "i")
        self.assertEqual(len(triple.prog), 4)
        self.assertIsInstance(triple.prog.stmts[0], Assign)
        self.assertTrue(all(isinstance(s, For) for s in triple.prog.stmts[1:]))
        self.assertIsInstance(triple.post, QF)
        self.assertEqual(written_names(triple.prog), {"S", "A"})

    def test_loop_counter_is_distinguished(self):
        triple = parse_program(SS_SOURCE)
        loop = triple.prog.stmts[2]
        store = loop.body.stmts[0]
        self.assertIsInstance(store, Store)
        self.assertEqual(store.index, Counter("j"))
        self.assertEqual(loop.bound, Param())

    def test_else_if_chain(self):
        triple = parse_program("""
            assume(true);
            for (i = 0; i < N; i = i + 1) {
              if (i == 0) { A[i] = 1; } else if (i == 1) { A[i] = 2; } else { A[i] = 3; }
            }
            assert(true);
        """)
        branch = triple.prog.stmts[0].body.stmts[0]
        self.assertIsInstance(branch, If)
        self.assertIsInstance(branch.orelse.stmts[0], If)

    def test_syntax_error_reports_position(self):
        with self.assertRaises(ProgramSyntaxError) as ctx:
            parse_program("assume(true);\nS = 0\nassert(S == 0);")
        self.assertEqual(ctx.exception.line, 3)

    def test_missing_assert(self):
        with self.assertRaises(ProgramSyntaxError):
            parse_program("assume(true); S = 0;")

    def test_grammar_violations(self):
        cases = [
            # nested loop
            "assume(true); for (i = 0; i < N; i = i + 1) { for (j = 0; j < N; j = j + 1) { A[j] = 0; } } assert(true);",
            # assignment to N
            "assume(true); N = 3; assert(true);",
            # counter not starting at 0
            "assume(true); for (i = 1; i < N; i = i + 1) { A[i] = 0; } assert(true);",
            # data-dependent bound
            "assume(true); for (i = 0; i < x; i = i + 1) { A[i] = 0; } assert(true);",
            # read inside an index
            "assume(true); for (i = 0; i < N; i = i + 1) { A[B[i]] = 0; } assert(true);",
        ]
        for source in cases:
            with self.subTest(source=source):
                with self.assertRaises(GrammarViolation):
                    parse_program(source)

    def test_quantified_conjunction(self):
        formula = parse_formula("(forall i in [0, N) :: A[i] == 1) && S == 0")
        self.assertEqual(len(formula.items), 2)
        self.assertIsInstance(formula.items[0], Forall)

    def test_unary_minus_binds_looser_than_power(self):
        state = ProgState(3, {"x": 2})
        self.assertEqual(evaluate_expr(parse_expr("-2 ** 2"), state), -4)
        self.assertEqual(evaluate_expr(parse_expr("(-2) ** 2"), state), 4)
        self.assertEqual(evaluate_expr(parse_expr("-x ** 2 * 3"), state), -12)
        self.assertEqual(parse_expr("2 ** -x"), BinOp("**", Const(2), Neg(Var("x"))))
        self.assertEqual(parse_expr("-3"), Const(-3))
        self.assertEqual(parse_expr("- -3"), Const(3))

    def test_negative_power_base_prints_with_parentheses(self):
        state = ProgState(3, {"x": 2})
        for text in ("(-2) ** 2", "-2 ** 2", "(-x) ** 3", "-x ** 3", "x * -x"):
            with self.subTest(text=text):
                expr = parse_expr(text)
                self.assertEqual(evaluate_expr(parse_expr(format_expr(expr)), state),
                                 evaluate_expr(expr, state))
        self.assertEqual(format_expr(parse_expr("(-2) ** 2")), "(-2) ** 2")

    def test_corpus_programs_reparse_after_printing(self):
        for path in sorted(CORPUS.rglob("*.fpi")):
            with self.subTest(program=path.name):
                triple = parse_program(path.read_text(encoding="utf-8"))
                self.assertEqual(parse_program(format_triple(triple)), triple)


class TestPolynomials(unittest.TestCase):
    """Polynomial normal forms."""

    def test_same_value(self):
        self.assertTrue(same_value(parse_expr("(N - 1) + 1"), Param()))
        self.assertTrue(same_value(parse_expr("2 * (x + 1)"), parse_expr("2 * x + 2")))
        self.assertFalse(same_value(parse_expr("x * x"), parse_expr("2 * x")))

    def test_degree_in_names(self):
        poly = to_poly(parse_expr("B[i] * B[i] + 3 * N * x"))
        self.assertEqual(poly.degree_in({"B"}), 2)
        self.assertEqual(poly.degree_in({"x"}), 1)
        self.assertEqual(poly.degree_in({"C"}), 0)

    def test_normalized_relation_puts_atoms_left(self):
        pred = simplify_bool(parse_formula("N - 1 == S_Nm1").pred)
        self.assertIsInstance(pred, Rel)
        self.assertEqual(pred.left, Var("S_Nm1"))
        self.assertTrue(same_value(pred.right, n_minus(1)))

    def test_decide_constant_relations(self):
        self.assertTrue(decide(parse_formula("3 * 2 == 6").pred))
        self.assertFalse(decide(parse_formula("1 > 2").pred))
        self.assertIsNone(decide(parse_formula("x > 2").pred))

    def test_division_by_constant_folds(self):
        self.assertTrue(same_value(simplify_expr(parse_expr("(4 * x + 8) / 4")), parse_expr("x + 2")))


class TestSubstitution(unittest.TestCase):
    """Parameter substitution and renaming."""

    def test_post_at_previous_size(self):
        post = parse_formula("S == N * (N + 2)")
        shifted = substitute_param(post, n_minus(1))
        self.assertTrue(same_value(shifted.pred.right, parse_expr("(N - 1) * (N + 1)")))

    def test_loop_bounds_follow_parameter(self):
        triple = parse_program(SS_SOURCE)
        shifted = substitute_param(triple.prog, n_minus(1))
        for loop, original in zip(shifted.stmts[1:], triple.prog.stmts[1:]):
            self.assertTrue(same_value(loop.bound, n_minus(1)))
            self.assertEqual(loop.body, original.body)

    def test_bounds_only_substitution(self):
        triple = parse_program(SS_SOURCE)
        lowered = substitute_bounds(triple.prog, n_minus(1))
        self.assertEqual(lowered.stmts[0], triple.prog.stmts[0])
        for loop, original in zip(lowered.stmts[1:], triple.prog.stmts[1:]):
            self.assertTrue(same_value(loop.bound, n_minus(1)))
            self.assertEqual(loop.body, original.body)
        body_use = parse_program("assume(true); for (i = 0; i < N; i = i + 1) { A[i] = N; } assert(true);")
        loop = substitute_bounds(body_use.prog, n_minus(1)).stmts[0]
        self.assertTrue(same_value(loop.bound, n_minus(1)))
        self.assertEqual(loop.body.stmts[0].value, Param())

    def test_rename_leaves_bound_variables(self):
        formula = parse_formula("forall i in [0, N) :: A[i] == i")
        renamed = rename_names(formula, {"A": "A1", "i": "j"})
        self.assertEqual(renamed.var, "i")
        self.assertEqual(renamed.body.left, Read("A1", Var("i")))


_leaf = st.one_of(
    st.integers(-9, 9).map(Const),
    st.just(Param()),
    st.just(Var("x")),
)
_exprs = st.recursive(
    _leaf,
    lambda inner: st.tuples(st.sampled_from("+-*"), inner, inner).map(lambda t: BinOp(*t)),
    max_leaves=8,
)


class TestSimplificationProperties(unittest.TestCase):
    """Simplification never changes the value of an expression."""

    @settings(max_examples=200, deadline=None)
    @given(_exprs, st.integers(1, 20), st.integers(-50, 50))
    def test_simplify_preserves_value(self, expr, n, x):
        state = ProgState(n, {"x": x})
        self.assertEqual(evaluate_expr(simplify_expr(expr), state), evaluate_expr(expr, state))

    @settings(max_examples=100, deadline=None)
    @given(_exprs)
    def test_printed_expression_reparses_to_same_value(self, expr):
        self.assertTrue(same_value(parse_expr(format_expr(expr)), expr))


if __name__ == '__main__':
    unittest.main()
