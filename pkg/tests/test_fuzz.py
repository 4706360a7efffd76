"""
Grammar-fuzzed programs checked against concrete execution
"""

import os
import unittest
from math import factorial
from pathlib import Path
import sys

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from hypothesis import HealthCheck, given, settings, strategies as st

from fpi.driver import VerdictKind, fpi_verify
from fpi.interpreter import InputSampler, evaluate_formula, interpret
from fpi.lang.parser import parse_program
from fpi.smt.solver import SolverSession

FUZZ_EXAMPLES = int(os.getenv("FPI_FUZZ_EXAMPLES", 200))
SIZES = range(1, 9)
INPUTS_PER_SIZE = 20
MAX_DEGREE = 4


def _atom(draw, counter, scalars, arrays):
    choices = ["A", "const", "counter"] + ["scalar"] * bool(scalars) + ["array"] * bool(arrays)
    kind = draw(st.sampled_from(choices))
    if kind == "A":
        return f"A[{counter}]"
    if kind == "array":
        return f"{draw(st.sampled_from(arrays))}[{counter}]"
    if kind == "scalar":
        return draw(st.sampled_from(scalars))
    if kind == "counter":
        return counter
    return str(draw(st.integers(0, 3)))


def _loop_expr(draw, counter, scalars, arrays):
    """One or two (possibly scaled) atoms joined by + or -."""
    terms = []
    for _ in range(draw(st.integers(1, 2))):
        atom = _atom(draw, counter, scalars, arrays)
        scale = draw(st.integers(1, 3))
        terms.append(atom if scale == 1 else f"{scale} * {atom}")
    text = terms[0]
    for term in terms[1:]:
        text += f" {draw(st.sampled_from('+-'))} {term}"
    return text


@st.composite
def fuzzed_programs(draw):
    """Program text with `assert(true)`; A is the constrained input array."""
    fill = draw(st.integers(-2, 3))
    lines = [f"assume(forall i in [0, N) :: A[i] == {fill});"]
    scalars, arrays = [], []
    counters = iter(f"t{k}" for k in range(8))
    for _ in range(draw(st.integers(2, 4))):
        kind = draw(st.sampled_from(["init", "sum", "map", "branch", "scale"]))
        if kind in ("sum", "branch", "scale") and not scalars:
            kind = "init"
        if kind == "init":
            target = draw(st.sampled_from(["S", "T", "U"]))
            value = str(draw(st.integers(-3, 3)))
            if scalars and draw(st.booleans()):
                value = f"{draw(st.sampled_from(scalars))} + {value}"
            lines.append(f"{target} = {value};")
            if target not in scalars:
                scalars.append(target)
        elif kind == "scale":
            target = draw(st.sampled_from(scalars))
            lines.append(f"{target} = {draw(st.integers(-2, 3))} * {target};")
        elif kind == "sum":
            t = next(counters)
            target = draw(st.sampled_from(scalars))
            others = [s for s in scalars if s != target]
            body = f"{target} = {target} + {_loop_expr(draw, t, others, arrays)};"
            lines.append(f"for ({t} = 0; {t} < N; {t} = {t} + 1) {{ {body} }}")
        elif kind == "branch":
            t = next(counters)
            target = draw(st.sampled_from(scalars))
            others = [s for s in scalars if s != target]
            guard = f"A[{t}] > {draw(st.integers(-2, 3))}"
            then = f"{target} = {target} + {_loop_expr(draw, t, others, arrays)};"
            orelse = f"{target} = {target} - {_loop_expr(draw, t, others, arrays)};"
            lines.append(f"for ({t} = 0; {t} < N; {t} = {t} + 1) "
                         f"{{ if ({guard}) {{ {then} }} else {{ {orelse} }} }}")
        else:
            t = next(counters)
            fresh = [b for b in ("B", "C") if b not in arrays]
            target = draw(st.sampled_from(fresh or arrays))
            value = _loop_expr(draw, t, scalars, [a for a in arrays if a != target])
            if target in arrays:
                value = f"{target}[{t}] + {value}"
            lines.append(f"for ({t} = 0; {t} < N; {t} = {t} + 1) {{ {target}[{t}] = {value}; }}")
            if target not in arrays:
                arrays.append(target)
    mutate = draw(st.booleans())
    return "\n".join(lines), scalars, arrays, mutate


def newton_deltas(values):
    """Forward differences at the first point, or None unless a low-degree polynomial fits."""
    rows = [list(values)]
    while any(rows[-1]) and len(rows[-1]) > 1:
        row = rows[-1]
        rows.append([b - a for a, b in zip(row, row[1:])])
    if any(rows[-1]):
        return None
    degree = len(rows) - 2
    # at least two zero differences must confirm the fit
    if degree > MAX_DEGREE or len(values) - degree - 1 < 2:
        return None
    return [row[0] for row in rows[:max(degree, 0) + 1]]


def newton_text(lhs, deltas, var, start):
    """`L * lhs == p(var)` with p in Newton form around `start`, L clearing denominators."""
    scale = factorial(len(deltas) - 1)
    terms = []
    for k, delta in enumerate(deltas):
        coef = delta * scale // factorial(k)
        if coef == 0:
            continue
        factors = [f"({coef})"]
        factors += [f"({var} - {start + j})" for j in range(k)]
        terms.append(" * ".join(factors))
    left = lhs if scale == 1 else f"{scale} * {lhs}"
    return left, " + ".join(terms) or "0"


def derive_post(source, scalars, arrays, mutate):
    """Post-condition fitted to concrete runs; mutation makes one conjunct false."""
    prog = parse_program(source + "\nassert(true);")
    sampler = InputSampler(seed=0)
    finals = {n: interpret(prog.prog, sampler.sample(prog, n)) for n in SIZES}
    conjuncts = []
    for name in scalars:
        deltas = newton_deltas([finals[n].scalars[name] for n in SIZES])
        if deltas is not None:
            conjuncts.append(("", *newton_text(name, deltas, "N", 1)))
    for name in arrays:
        cells = {n: [finals[n].arrays[name][k] for k in range(n)] for n in SIZES}
        top = cells[max(SIZES)]
        if all(cells[n] == top[:n] for n in SIZES):
            deltas = newton_deltas(top)
            if deltas is not None:
                left, right = newton_text(f"{name}[i]", deltas, "i", 0)
                conjuncts.append(("forall i in [0, N) :: ", left, right))
        elif all(len(set(cells[n])) == 1 for n in SIZES):
            deltas = newton_deltas([cells[n][0] for n in SIZES])
            if deltas is not None:
                left, right = newton_text(f"{name}[i]", deltas, "N", 1)
                conjuncts.append(("forall i in [0, N) :: ", left, right))
    if not conjuncts:
        return "true", False
    parts = []
    for k, (prefix, left, right) in enumerate(conjuncts):
        if mutate and k == len(conjuncts) - 1:
            right = f"{right} + 1"
        parts.append(f"({prefix}{left} == {right})")
    return " && ".join(parts), mutate


class TestFuzzedPrograms(unittest.TestCase):
    """Verdicts on fuzzed programs agree with concrete runs."""

    @classmethod
    def setUpClass(cls):
        cls.session = SolverSession()

    @classmethod
    def tearDownClass(cls):
        cls.session.__exit__(None, None, None)

    @settings(max_examples=FUZZ_EXAMPLES, deadline=None,
              suppress_health_check=[HealthCheck.too_slow])
    @given(fuzzed_programs())
    def test_verdicts_match_execution(self, generated):
        source, scalars, arrays, mutate = generated
        post, mutated = derive_post(source, scalars, arrays, mutate)
        triple = parse_program(f"{source}\nassert({post});")
        verdict = fpi_verify(triple, self.session, max_depth=2)
        if verdict.kind is VerdictKind.COUNTEREXAMPLE:
            self.assertTrue(mutated, f"counterexample for a fitted post-condition:\n{source}")
            witness = verdict.witness
            self.assertTrue(evaluate_formula(triple.pre, witness.initial))
            final = interpret(triple.prog, witness.initial)
            self.assertFalse(evaluate_formula(triple.post, final))
        elif verdict.is_valid:
            self.assertFalse(mutated, f"false post-condition proved:\n{source}\n{post}")
            for n in SIZES:
                sampler = InputSampler(seed=n)
                for _ in range(INPUTS_PER_SIZE):
                    final = interpret(triple.prog, sampler.sample(triple, n))
                    self.assertTrue(evaluate_formula(triple.post, final), f"N={n}")


class TestPostFitting(unittest.TestCase):
    """Exact polynomial fits used to build post-conditions."""

    def test_quadratic_fit(self):
        values = [n * (n + 2) for n in SIZES]
        deltas = newton_deltas(values)
        self.assertEqual(deltas, [3, 5, 2])
        self.assertEqual(newton_text("S", deltas, "N", 1),
                         ("2 * S", "(6) + (10) * (N - 1) + (2) * (N - 1) * (N - 2)"))

    def test_constant_and_zero(self):
        self.assertEqual(newton_deltas([4] * 8), [4])
        self.assertEqual(newton_text("S", [0], "N", 1), ("S", "0"))

    def test_exponential_values_do_not_fit(self):
        self.assertIsNone(newton_deltas([2 ** n for n in SIZES]))

    def test_derived_post_holds(self):
        source = ("assume(forall i in [0, N) :: A[i] == 1);\nS = 0;\n"
                  "for (t0 = 0; t0 < N; t0 = t0 + 1) { S = S + A[t0]; }\n"
                  "for (t1 = 0; t1 < N; t1 = t1 + 1) { B[t1] = A[t1] + t1; }")
        post, mutated = derive_post(source, ["S"], ["B"], False)
        self.assertFalse(mutated)
        self.assertEqual(post, "(S == (1) + (1) * (N - 1)) && (forall i in [0, N) :: B[i] == (1) + (1) * (i - 0))")
        triple = parse_program(f"{source}\nassert({post});")
        final = interpret(triple.prog, InputSampler(seed=0).sample(triple, 5))
        self.assertTrue(evaluate_formula(triple.post, final))


if __name__ == '__main__':
    unittest.main()
