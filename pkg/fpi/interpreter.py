"""
Concrete interpreter for annotated array programs.

Used as the semantics oracle: counterexample replay, the `interpret`
command, differential checks of difference programs, and property tests.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from fpi.errors import DivisionByZero, InputSamplingFailed, RuntimeTrap, UninitializedRead
from fpi.lang.ast import (
    And, Assign, BinOp, BoolConst, BoolExpr, Conj, Const, Counter, Disj, Exists, Expr,
    For, Forall, Formula, HoareTriple, If, Neg, Not, Or, Param, QF, Read, Rel, Seq, Stmt,
    Store, Truth, Var, array_names, conjuncts, expr_names, formula_names, iter_stmts,
    n_minus, read_names, written_names,
)
from fpi.lang.poly import compare, euclid_div, euclid_mod
from fpi.lang.printer import format_expr, format_stmt
from fpi.lang.subst import substitute_bounds

logger = logging.getLogger(__name__)

SAMPLE_LOW, SAMPLE_HIGH = -16, 16


@dataclass
class ProgState:
    n: int
    scalars: Dict[str, int] = field(default_factory=dict)
    arrays: Dict[str, Dict[int, int]] = field(default_factory=dict)

    def copy(self, n: Optional[int] = None) -> "ProgState":
        return ProgState(self.n if n is None else n, dict(self.scalars),
                         {name: dict(cells) for name, cells in self.arrays.items()})

    def value(self, name: str):
        if name in self.arrays:
            return dict(self.arrays[name])
        if name in self.scalars:
            return self.scalars[name]
        raise UninitializedRead(name)

    def to_dict(self) -> Dict[str, object]:
        out: Dict[str, object] = {"N": self.n}
        out.update(sorted(self.scalars.items()))
        for name, cells in sorted(self.arrays.items()):
            out[name] = [cells.get(k) for k in range(max(cells, default=-1) + 1)]
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "ProgState":
        state = cls(int(data["N"]))
        for name, value in data.items():
            if name == "N":
                continue
            if isinstance(value, list):
                state.arrays[name] = {k: int(v) for k, v in enumerate(value) if v is not None}
            elif isinstance(value, dict):
                state.arrays[name] = {int(k): int(v) for k, v in value.items()}
            else:
                state.scalars[name] = int(value)
        return state


class _Evaluator:
    def __init__(self, state: ProgState):
        self.state = state
        self.counters: Dict[str, int] = {}
        self.bound: Dict[str, int] = {}

    def expr(self, e: Expr) -> int:
        if isinstance(e, Const):
            return e.value
        if isinstance(e, Param):
            return self.state.n
        if isinstance(e, Counter):
            return self.counters[e.name]
        if isinstance(e, Var):
            if e.name in self.bound:
                return self.bound[e.name]
            if e.name in self.counters:
                return self.counters[e.name]
            if e.name not in self.state.scalars:
                raise UninitializedRead(e.name)
            return self.state.scalars[e.name]
        if isinstance(e, Read):
            index = self.expr(e.index)
            cells = self.state.arrays.get(e.array)
            if cells is None or index not in cells:
                raise UninitializedRead(e.array, index)
            return cells[index]
        if isinstance(e, Neg):
            return -self.expr(e.operand)
        if isinstance(e, BinOp):
            a, b = self.expr(e.left), self.expr(e.right)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            if e.op == "/":
                return euclid_div(a, b)
            if e.op == "%":
                return euclid_mod(a, b)
            if e.op == "**":
                if b < 0:
                    raise RuntimeTrap(f"negative exponent in {format_expr(e)}")
                return a ** b
        raise TypeError(f"cannot evaluate {e!r}")

    def pred(self, p: BoolExpr) -> bool:
        if isinstance(p, BoolConst):
            return p.value
        if isinstance(p, Rel):
            return compare(p.op, self.expr(p.left), self.expr(p.right))
        if isinstance(p, Not):
            return not self.pred(p.operand)
        if isinstance(p, And):
            return all(self.pred(item) for item in p.items)
        if isinstance(p, Or):
            return any(self.pred(item) for item in p.items)
        raise TypeError(f"cannot evaluate {p!r}")

    def formula(self, f: Formula) -> bool:
        if isinstance(f, Truth):
            return f.value
        if isinstance(f, QF):
            return self.pred(f.pred)
        if isinstance(f, (Forall, Exists)):
            lo, hi = self.expr(f.lo), self.expr(f.hi)
            saved = self.bound.get(f.var)
            try:
                for k in range(lo, hi):
                    self.bound[f.var] = k
                    holds = self.pred(f.body)
                    if isinstance(f, Forall) and not holds:
                        return False
                    if isinstance(f, Exists) and holds:
                        return True
            finally:
                if saved is None:
                    self.bound.pop(f.var, None)
                else:
                    self.bound[f.var] = saved
            return isinstance(f, Forall)
        if isinstance(f, Conj):
            return all(self.formula(item) for item in f.items)
        if isinstance(f, Disj):
            return any(self.formula(item) for item in f.items)
        raise TypeError(f"cannot evaluate {f!r}")

    def run(self, stmt: Stmt):
        if isinstance(stmt, Seq):
            for s in stmt.stmts:
                self.run(s)
            return
        try:
            if isinstance(stmt, Assign):
                self.state.scalars[stmt.target] = self.expr(stmt.value)
            elif isinstance(stmt, Store):
                index = self.expr(stmt.index)
                self.state.arrays.setdefault(stmt.array, {})[index] = self.expr(stmt.value)
            elif isinstance(stmt, If):
                self.run(stmt.then if self.pred(stmt.cond) else stmt.orelse)
            elif isinstance(stmt, For):
                bound = self.expr(stmt.bound)
                for k in range(bound):
                    self.counters[stmt.counter] = k
                    self.run(stmt.body)
                self.counters.pop(stmt.counter, None)
            else:
                raise TypeError(f"cannot execute {stmt!r}")
        except ZeroDivisionError:
            raise DivisionByZero(format_stmt(stmt).splitlines()[0].strip()) from None


def interpret(prog: Stmt, state: ProgState) -> ProgState:
    """Run `prog` from a copy of `state`; the input state is left untouched."""
    out = state.copy()
    _Evaluator(out).run(prog)
    return out


def evaluate_expr(expr: Expr, state: ProgState) -> int:
    try:
        return _Evaluator(state).expr(expr)
    except ZeroDivisionError:
        raise DivisionByZero(format_expr(expr)) from None


def evaluate_formula(formula: Formula, state: ProgState) -> bool:
    try:
        return _Evaluator(state).formula(formula)
    except ZeroDivisionError:
        raise DivisionByZero("formula") from None


def failing_conjunct(formula: Formula, state: ProgState) -> Optional[Formula]:
    """First top-level conjunct that evaluates to false (None if all hold)."""
    for item in conjuncts(formula):
        if not evaluate_formula(item, state):
            return item
    return None


# Input sampling ------------------------------------------------------------

class InputSampler:
    """Draws initial states satisfying a precondition.

    Universally quantified equalities `A[i] == e` and scalar equalities are
    satisfied by construction; existentials get a witness at a random index;
    everything else is rejection-sampled.
    """

    def __init__(self, seed: Optional[int] = None, attempts: int = 200):
        self.rng = np.random.default_rng(seed)
        self.attempts = attempts

    def names(self, triple: HoareTriple) -> Tuple[List[str], List[str]]:
        arrays = array_names(triple.pre, triple.prog, triple.post)
        names = read_names(triple.prog) | written_names(triple.prog)
        names |= formula_names(triple.pre) | formula_names(triple.post)
        counters = {s.counter for s in iter_stmts(triple.prog) if isinstance(s, For)}
        scalars = sorted(names - arrays - counters)
        return scalars, sorted(arrays)

    def draw(self) -> int:
        return int(self.rng.integers(SAMPLE_LOW, SAMPLE_HIGH + 1))

    def sample(self, triple: HoareTriple, n: int) -> ProgState:
        scalars, arrays = self.names(triple)
        for _ in range(self.attempts):
            state = ProgState(n)
            for name in scalars:
                state.scalars[name] = self.draw()
            for name in arrays:
                state.arrays[name] = {k: self.draw() for k in range(n)}
            try:
                self._construct(triple.pre, state)
                if evaluate_formula(triple.pre, state):
                    return state
            except RuntimeTrap:
                continue
        raise InputSamplingFailed(n, self.attempts)

    def _construct(self, pre: Formula, state: ProgState):
        ev = _Evaluator(state)
        for item in conjuncts(pre):
            if isinstance(item, QF) and isinstance(item.pred, Rel) and item.pred.op == "==":
                left = item.pred.left
                if isinstance(left, Var) and left.name in state.scalars:
                    state.scalars[left.name] = ev.expr(item.pred.right)
            elif isinstance(item, (Forall, Exists)):
                body = item.body
                if not (isinstance(body, Rel) and isinstance(body.left, Read)
                        and body.left.index == Var(item.var)):
                    continue
                array = body.left.array
                if array in expr_names(body.right) or array not in state.arrays:
                    continue
                lo, hi = ev.expr(item.lo), ev.expr(item.hi)
                if hi <= lo:
                    continue
                cells = range(lo, hi)
                if isinstance(item, Exists):
                    cells = [int(self.rng.integers(lo, hi))]
                for k in cells:
                    ev.bound[item.var] = k
                    state.arrays[array][k] = self._solve(body.op, ev.expr(body.right))
                ev.bound.pop(item.var, None)

    def _solve(self, op: str, target: int) -> int:
        offset = int(self.rng.integers(0, 8))
        if op == "==":
            return target
        if op in (">", ">="):
            return target + offset + (1 if op == ">" else 0)
        if op in ("<", "<="):
            return target - offset - (1 if op == "<" else 0)
        return target + offset + 1


# Differential check ----------------------------------------------------------

@dataclass
class Divergence:
    n: int
    name: str
    expected: object
    actual: object
    detail: str = ""


@dataclass
class DifferentialReport:
    checked: List[int] = field(default_factory=list)
    divergences: List[Divergence] = field(default_factory=list)
    post_holds: Dict[int, Tuple[bool, bool]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.divergences

    def first(self) -> Optional[Divergence]:
        return self.divergences[0] if self.divergences else None


def diff_initial_state(prev_final: ProgState, n: int, written: Iterable[str],
                       prev_name: Callable[[str], str]) -> ProgState:
    """State in which a difference program starts: N advanced, snapshots wired."""
    state = prev_final.copy(n)
    for name in written:
        if name in prev_final.arrays:
            state.arrays[prev_name(name)] = dict(prev_final.arrays[name])
        elif name in prev_final.scalars:
            state.scalars[prev_name(name)] = prev_final.scalars[name]
    return state


def differential_check(triple: HoareTriple, diff_prog: Stmt, written: Iterable[str],
                       prev_name: Callable[[str], str], n_values: Iterable[int],
                       sampler: Optional[InputSampler] = None, samples: int = 1) -> DifferentialReport:
    """Compare P_N against P_{N-1}; dP_N on every post-condition name."""
    sampler = sampler or InputSampler(seed=0)
    written = sorted(set(written))
    observed = sorted(formula_names(triple.post))
    report = DifferentialReport()
    for n in n_values:
        report.checked.append(n)
        for _ in range(samples):
            s0 = sampler.sample(triple, n)
            try:
                expected = interpret(triple.prog, s0)
                prev = interpret(triple.prog, s0.copy(n - 1))
                actual = interpret(diff_prog, diff_initial_state(prev, n, written, prev_name))
            except RuntimeTrap as e:
                report.divergences.append(Divergence(n, "<trap>", None, None, str(e)))
                continue
            for name in observed:
                want = _observe(expected, name, n)
                got = _observe(actual, name, n)
                if want != got:
                    report.divergences.append(Divergence(
                        n, name, want, got, f"initial state {s0.to_dict()}"))
            report.post_holds[n] = (_holds(triple.post, expected), _holds(triple.post, actual))
        if report.divergences:
            logger.debug("divergence at N=%d: %s", n, report.divergences[0])
            break
    return report


def unaffected_check(triple: HoareTriple, affected: Iterable[str], n_values: Iterable[int],
                     sampler: Optional[InputSampler] = None, samples: int = 1) -> DifferentialReport:
    """Compare P_{N-1} against P with every loop bound lowered to N-1.

    Names outside `affected` must end with the same value in both runs; arrays
    are compared on the cells of the smaller size.
    """
    sampler = sampler or InputSampler(seed=0)
    lowered = substitute_bounds(triple.prog, n_minus(1))
    observed = sorted(written_names(triple.prog) - set(affected))
    report = DifferentialReport()
    for n in n_values:
        report.checked.append(n)
        for _ in range(samples):
            s0 = sampler.sample(triple, n)
            try:
                expected = interpret(triple.prog, s0.copy(n - 1))
                actual = interpret(lowered, s0)
            except RuntimeTrap as e:
                report.divergences.append(Divergence(n, "<trap>", None, None, str(e)))
                continue
            for name in observed:
                want = _observe(expected, name, n - 1)
                got = _observe(actual, name, n - 1)
                if want != got:
                    report.divergences.append(Divergence(
                        n, name, want, got, f"initial state {s0.to_dict()}"))
        if report.divergences:
            logger.debug("unaffected name diverges at N=%d: %s", n, report.divergences[0])
            break
    return report


def _observe(state: ProgState, name: str, n: int):
    if name in state.arrays:
        cells = state.arrays[name]
        return tuple(cells.get(k) for k in range(n))
    return state.scalars.get(name)


def _holds(formula: Formula, state: ProgState) -> Optional[bool]:
    try:
        return evaluate_formula(formula, state)
    except RuntimeTrap:
        return None


__all__ = [
    "ProgState", "interpret", "evaluate_expr", "evaluate_formula", "failing_conjunct",
    "InputSampler", "Divergence", "DifferentialReport", "diff_initial_state",
    "differential_check", "unaffected_check",
]
