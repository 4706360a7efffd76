"""
Tests for the concrete interpreter and input sampling
"""

import unittest
from pathlib import Path
import sys

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from hypothesis import given, settings, strategies as st

from fpi.errors import DivisionByZero, InputSamplingFailed, UninitializedRead
from fpi.interpreter import (
    InputSampler, ProgState, evaluate_formula, failing_conjunct, interpret,
)
from fpi.lang.ast import Seq
from fpi.lang.parser import parse_formula, parse_program, parse_stmts

CORPUS = Path(__file__).parent.parent / "corpus"


def load(relative: str):
    return parse_program((CORPUS / relative).read_text(encoding="utf-8"))


class TestInterpret(unittest.TestCase):
    """Big-step execution."""

    def test_ss_at_three(self):
        triple = load("safe/ss.fpi")
        final = interpret(triple.prog, ProgState(3, arrays={"A": {0: 1, 1: 1, 2: 1}}))
        self.assertEqual(final.scalars["S"], 15)
        self.assertEqual(final.arrays["A"], {0: 4, 1: 4, 2: 4})
        self.assertTrue(evaluate_formula(triple.post, final))

    def test_cubes_at_two(self):
        triple = load("safe/cubes.fpi")
        final = interpret(triple.prog, ProgState(2))
        self.assertEqual(final.arrays["A"], {0: 6, 1: 12})
        self.assertEqual(final.arrays["B"], {0: 1, 1: 7})
        self.assertEqual(final.arrays["C"], {0: 0, 1: 1})

    def test_cubes_post_holds_for_small_sizes(self):
        triple = load("safe/cubes.fpi")
        for n in range(1, 9):
            with self.subTest(N=n):
                self.assertTrue(evaluate_formula(triple.post, interpret(triple.prog, ProgState(n))))

    def test_empty_program_leaves_state(self):
        state = ProgState(4, {"x": 2}, {"A": {0: 1}})
        self.assertEqual(interpret(Seq(), state), state)

    def test_input_state_is_not_mutated(self):
        state = ProgState(2, {"x": 1})
        interpret(parse_stmts("x = x + 1;"), state)
        self.assertEqual(state.scalars["x"], 1)

    def test_division_by_zero_traps(self):
        with self.assertRaises(DivisionByZero):
            interpret(parse_stmts("y = 4 / x;"), ProgState(1, {"x": 0}))

    def test_uninitialized_read(self):
        with self.assertRaises(UninitializedRead) as ctx:
            interpret(parse_stmts("y = A[0];"), ProgState(1))
        self.assertEqual(ctx.exception.name, "A")

    def test_euclidean_division(self):
        final = interpret(parse_stmts("q = x / 3; r = x % 3;"), ProgState(1, {"x": -7}))
        self.assertEqual((final.scalars["q"], final.scalars["r"]), (-3, 2))

    def test_failing_conjunct_names_the_violation(self):
        formula = parse_formula("x == 1 && y == 2")
        failed = failing_conjunct(formula, ProgState(1, {"x": 1, "y": 3}))
        self.assertEqual(failed, parse_formula("y == 2"))

    def test_state_dict_conversion(self):
        state = ProgState(3, {"S": 5}, {"A": {0: 1, 1: 2, 2: 3}})
        self.assertEqual(state.to_dict(), {"N": 3, "S": 5, "A": [1, 2, 3]})
        self.assertEqual(ProgState.from_dict(state.to_dict()), state)


class TestInputSampler(unittest.TestCase):
    """Initial states drawn under the pre-condition."""

    def test_universal_equality_is_constructed(self):
        triple = load("safe/ss.fpi")
        sampler = InputSampler(seed=1)
        for n in (1, 4, 7):
            state = sampler.sample(triple, n)
            self.assertEqual([state.arrays["A"][k] for k in range(n)], [1] * n)

    def test_existential_gets_a_witness(self):
        triple = parse_program("""
            assume(exists i in [0, N) :: A[i] == 9);
            x = 0;
            assert(true);
        """)
        state = InputSampler(seed=3).sample(triple, 5)
        self.assertIn(9, state.arrays["A"].values())

    def test_unsatisfiable_precondition(self):
        triple = parse_program("assume(x > 0 && x < 0); y = 1; assert(true);")
        with self.assertRaises(InputSamplingFailed):
            InputSampler(seed=0, attempts=20).sample(triple, 1)


class TestInterpreterProperties(unittest.TestCase):
    """Execution is a pure function of the initial state."""

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 10_000))
    def test_deterministic(self, n, seed):
        triple = load("safe/ss2.fpi")
        state = InputSampler(seed=seed).sample(triple, n)
        self.assertEqual(interpret(triple.prog, state), interpret(triple.prog, state))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 10_000))
    def test_safe_sums_hold_on_sampled_inputs(self, n, seed):
        triple = load("safe/zerosum4.fpi")
        state = InputSampler(seed=seed).sample(triple, n)
        self.assertTrue(evaluate_formula(triple.post, interpret(triple.prog, state)))


if __name__ == '__main__':
    unittest.main()
