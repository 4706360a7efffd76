"""
Pre-conditions for the inductive step.

`syntactic_diff` derives the difference pre-condition from phi,
`loop_free_wp` pushes post-condition conjuncts back through the straight-line
part of a difference program, and `lift_to_quantified` turns a predicate
about cell N-1 into one about every cell.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import gcd
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from fpi.diff import DiffProgram
from fpi.errors import DiffPreFailed, LiftFailed
from fpi.lang.ast import (
    And, Assign, BoolExpr, Conj, Const, Counter, Disj, Exists, Expr, For, Forall, Formula, If,
    Not, Or, Param, QF, Read, Rel, Seq, Stmt, Store, Truth, Var, add, bool_exprs, conj,
    conjuncts, disj, formula_names, formula_uses_param, loops, n_minus, pred_names,
    sub_exprs, uses_param, written_names, TRUE,
)
from fpi.lang.poly import (
    Poly, atom_name, decide, normalize_rel, same_value, simplify_bool, simplify_expr, to_poly,
)
from fpi.lang.printer import format_bool, format_formula
from fpi.lang.subst import (
    instantiate, map_bool, map_node, rename_names, substitute_param, substitute_var,
)
from fpi.utils import fresh_name

logger = logging.getLogger(__name__)


def to_prev(node, written: Iterable[str], suffix: str):
    """The same statement about the N-1 run: N shifted down, P-written names on snapshots."""
    return rename_names(substitute_param(node, n_minus(1)), {x: x + suffix for x in written})


def to_next(node, written: Iterable[str], suffix: str):
    """Inverse of `to_prev`."""
    back = rename_names(node, {x + suffix: x for x in written})
    return substitute_param(back, add(Param(), Const(1)))


class _Checker:
    def __init__(self, session, lower: int):
        self.session = session
        self.lower = lower
        self.cache: Dict[BoolExpr, bool] = {}

    def holds(self, pred: BoolExpr) -> bool:
        verdict = decide(pred)
        if verdict is not None:
            return verdict
        if self.session is None:
            return False
        if pred not in self.cache:
            self.cache[pred] = self.session.valid([], QF(pred), lower=self.lower)
        return self.cache[pred]

    def implies(self, hypotheses: Sequence[Formula], goal: Formula) -> bool:
        if isinstance(goal, QF) and decide(goal.pred) is True:
            return True
        if self.session is None:
            return False
        return self.session.valid(list(hypotheses), goal, lower=self.lower)

    def satisfiable(self, constraints: Sequence[BoolExpr]) -> bool:
        if self.session is None:
            return True
        return self.session.satisfiable(constraints, lower=self.lower)


# Difference pre-condition ----------------------------------------------------

def _universal(formula: Formula) -> bool:
    return isinstance(formula, (Forall, QF, Truth))


class _SyntacticDiff:
    def __init__(self, written: frozenset, checker: _Checker):
        self.written = written
        self.checker = checker

    def keep(self, formula: Formula) -> Formula:
        if formula_names(formula) & self.written:
            return Truth(True)
        return formula

    def check(self, stronger: Formula, weaker: Formula, origin: Formula):
        if not self.checker.implies([stronger], weaker):
            raise DiffPreFailed(format_formula(origin))

    def diff(self, phi: Formula) -> Formula:
        shifted = substitute_param(phi, n_minus(1))
        if isinstance(phi, Truth):
            return Truth(True)
        if isinstance(phi, QF):
            if formula_uses_param(phi):
                self.check(phi, shifted, phi)
            return Truth(True)
        if isinstance(phi, Forall):
            self.check(phi, shifted, phi)
            return self.keep(self.new_cells(phi, conj))
        if isinstance(phi, Exists):
            self.check(shifted, phi, phi)
            return self.keep(self.new_cells(phi, disj))
        if isinstance(phi, Conj):
            parts = [self.diff(item) for item in phi.items]
            if all(_universal(item) for item in phi.items):
                return conj(self.keep(p) for p in parts)
            return self.keep(disj(parts))
        if isinstance(phi, Disj):
            return self.keep(disj(self.diff(item) for item in phi.items))
        raise TypeError(f"not a formula: {phi!r}")

    @staticmethod
    def new_cells(phi, combine) -> Formula:
        """The body over the indices phi(N) ranges over and phi(N-1) does not."""
        lo_moves, hi_moves = uses_param(phi.lo), uses_param(phi.hi)
        if lo_moves == hi_moves:
            return Truth(True)
        if hi_moves:
            start, end = simplify_expr(substitute_param(phi.hi, n_minus(1))), phi.hi
        else:
            start, end = phi.lo, simplify_expr(substitute_param(phi.lo, n_minus(1)))
        width = to_poly(end) - to_poly(start)
        if not width.is_const():
            return type(phi)(phi.var, start, end, phi.body)
        items = []
        for j in range(width.const_value()):
            index = simplify_expr(add(start, Const(j)))
            items.append(QF(_tidy(instantiate(phi, index))))
        return combine(items) if items else Truth(True)


def syntactic_diff(phi: Formula, written: Iterable[str], session=None, lower: int = 1) -> Formula:
    """dphi such that phi(N) -> phi(N-1) (.) dphi and P_{N-1} writes no name of dphi.

    Raises DiffPreFailed when phi is not monotone in N the way its quantifier needs.
    """
    result = _SyntacticDiff(frozenset(written), _Checker(session, lower)).diff(phi)
    logger.debug("difference pre-condition: %s", format_formula(result))
    return result


def frame_conjuncts(phi: Formula, written: Iterable[str]) -> List[Formula]:
    """Conjuncts of phi over names P never writes; they still hold when dP_N starts."""
    written = set(written)
    return [item for item in conjuncts(phi) if not formula_names(item) & written]


# Simplification against known facts -----------------------------------------

def _tidy(pred: BoolExpr) -> BoolExpr:
    """Both sides of every relation in canonical form, without moving terms."""
    if isinstance(pred, Rel):
        return Rel(pred.op, simplify_expr(pred.left), simplify_expr(pred.right))
    if isinstance(pred, Not):
        return Not(_tidy(pred.operand))
    if isinstance(pred, (And, Or)):
        return type(pred)(tuple(_tidy(p) for p in pred.items))
    return pred


def _reduce(pred: BoolExpr) -> BoolExpr:
    """Divide (in)equalities by the gcd of their coefficients."""
    if isinstance(pred, Rel) and pred.op in ("==", "!="):
        diff = to_poly(pred.left) - to_poly(pred.right)
        g = 0
        for c in diff.terms.values():
            g = gcd(g, c)
        if g > 1:
            diff = diff.exact_div(g)
            return normalize_rel(pred.op, diff.to_expr(), Const(0))
        return pred
    if isinstance(pred, Not):
        return Not(_reduce(pred.operand))
    if isinstance(pred, (And, Or)):
        return type(pred)(tuple(_reduce(p) for p in pred.items))
    return pred


def _atoms(pred: BoolExpr) -> Iterator[Expr]:
    for e in bool_exprs(pred):
        for x in sub_exprs(e):
            if isinstance(x, (Var, Read)):
                yield x


def _equations(pred: BoolExpr) -> List[Poly]:
    if isinstance(pred, Rel) and pred.op == "==":
        return [to_poly(pred.left) - to_poly(pred.right)]
    if isinstance(pred, And):
        return [p for item in pred.items for p in _equations(item)]
    return []


class _Facts:
    """Equalities usable to solve for single atoms, including instances of ranged facts."""

    def __init__(self, formulas: Sequence[Formula], checker: _Checker):
        self.checker = checker
        self.equations: List[Poly] = []
        self.ranged: List[Forall] = []
        for formula in formulas:
            for item in conjuncts(formula):
                if isinstance(item, QF):
                    self.equations.extend(_equations(item.pred))
                elif isinstance(item, Forall) and _equations(item.body):
                    self.ranged.append(item)

    def instances(self, atom: Read) -> List[Poly]:
        found = []
        for fact in self.ranged:
            v = Var(fact.var)
            for e in bool_exprs(fact.body):
                for read in sub_exprs(e):
                    if not isinstance(read, Read) or read.array != atom.array:
                        continue
                    split = to_poly(read.index).linear_split(v)
                    if split is None or abs(split[0]) != 1:
                        continue
                    index = (to_poly(atom.index) - split[1]).scale(split[0]).to_expr()
                    inside = And((Rel("<=", fact.lo, index), Rel("<", index, fact.hi)))
                    if self.checker.holds(simplify_bool(inside)):
                        found.extend(_equations(instantiate(fact, index)))
        return found

    def solve(self, atom: Expr) -> Optional[Expr]:
        """A value for `atom`, preferring one over N and constants only."""
        if isinstance(atom, Read):
            atom = Read(atom.array, simplify_expr(atom.index))
            candidates = self.equations + self.instances(atom)
        else:
            candidates = self.equations
        best = None
        for poly in candidates:
            split = poly.linear_split(atom)
            if split is None or abs(split[0]) != 1:
                continue
            value = (-split[1]).scale(split[0])
            if all(isinstance(a, Param) for a in value.atoms()):
                return value.to_expr()
            if best is None:
                best = value
        return None if best is None else best.to_expr()

    def substitute(self, pred: BoolExpr, allowed: Callable[[Expr], bool]) -> BoolExpr:
        def fn(e: Expr) -> Expr:
            if isinstance(e, (Var, Read)) and allowed(e):
                value = self.solve(e)
                if value is not None:
                    return value
            return e
        return map_bool(pred, fn)


# Weakest pre-condition --------------------------------------------------------

@dataclass
class WpResult:
    """A candidate strengthening: `at_n` over final names, `at_nm1` its N-1 form."""
    at_n: Formula
    at_nm1: Formula


def _writes(seq: Seq, enclosing: Tuple[For, ...] = ()) -> Iterator[Tuple[Stmt, Tuple[For, ...]]]:
    for s in seq.stmts:
        if isinstance(s, (Assign, Store)):
            yield s, enclosing
        elif isinstance(s, If):
            yield from _writes(s.then, enclosing)
            yield from _writes(s.orelse, enclosing)
        elif isinstance(s, For):
            yield from _writes(s.body, enclosing + (s,))


def _counters_renamed(node, enclosing: Tuple[For, ...], suffix: str):
    names = {loop.counter for loop in enclosing}
    return map_node(node, lambda e: Counter(e.name + suffix)
                    if isinstance(e, Counter) and e.name in names else e)


class _Wp:
    def __init__(self, d: DiffProgram, hypotheses: Sequence[Formula],
                 post_facts: Sequence[Formula], checker: _Checker):
        self.d = d
        self.checker = checker
        self.hyps = _Facts(hypotheses, checker)
        self.post = _Facts(post_facts, checker)
        self.stmts = d.prog.stmts
        self.loop_written = set()
        for loop in loops(d.prog):
            self.loop_written |= written_names(loop)
        self.snapshots = set(d.snapshots.values())

    # cells

    def may_write(self, stmts: Sequence[Stmt], atom: Expr,
                  constraints: Sequence[BoolExpr] = ()) -> bool:
        name = atom_name(atom)
        for w, enclosing in _writes(Seq(tuple(stmts))):
            if isinstance(w, Assign):
                if w.target == name:
                    return True
                continue
            if w.array != name:
                continue
            if not isinstance(atom, Read):
                return True
            ranges = []
            for loop in enclosing:
                counter = Counter(loop.counter + "__w")
                ranges += [Rel("<=", Const(0), counter),
                           Rel("<", counter, _counters_renamed(loop.bound, enclosing, "__w"))]
            index = _counters_renamed(w.index, enclosing, "__w")
            if self.checker.satisfiable(ranges + list(constraints) + [Rel("==", index, atom.index)]):
                return True
        return False

    def hits(self, loop: For, pred: BoolExpr) -> bool:
        targets = written_names(loop)
        return any(atom_name(a) in targets and self.may_write([loop], a) for a in _atoms(pred))

    def distinct(self, a: Expr, b: Expr) -> bool:
        diff = to_poly(a) - to_poly(b)
        if diff.is_const():
            return diff.const_value() != 0
        return self.checker.holds(Rel("!=", a, b))

    # predicates

    def simplify(self, pred: BoolExpr) -> BoolExpr:
        constant = lambda e: atom_name(e) not in self.d.written
        for _ in range(3):
            nxt = _reduce(simplify_bool(self.hyps.substitute(pred, constant)))
            if nxt == pred:
                break
            pred = nxt
        return pred

    def settled(self, pred: BoolExpr, stmt: Stmt, after: Sequence[Stmt]) -> bool:
        """May the walk stop before `stmt`, keeping pred as a statement about final values?"""
        names = pred_names(pred)
        if names & self.snapshots or not (written_names(stmt) & self.loop_written & names):
            return False
        return not any(self.may_write(after, a) for a in _atoms(pred) if atom_name(a) in self.d.written)

    def through_post(self, pred: BoolExpr, loop: For, after: Sequence[Stmt]) -> Optional[BoolExpr]:
        """Cells a loop writes, replaced by what the post-condition says about them."""
        targets = written_names(loop)
        allowed = lambda e: atom_name(e) in targets and not self.may_write(after, e)
        result = self.simplify(self.post.substitute(pred, allowed))
        if self.hits(loop, result):
            return None
        return result

    def backward(self, stmt: Stmt, pred: BoolExpr) -> Optional[BoolExpr]:
        if isinstance(stmt, Assign):
            return substitute_var(pred, stmt.target, stmt.value)
        if isinstance(stmt, Store):
            unresolved = []

            def fn(e: Expr) -> Expr:
                if isinstance(e, Read) and e.array == stmt.array:
                    if same_value(e.index, stmt.index):
                        return stmt.value
                    if not self.distinct(e.index, stmt.index):
                        unresolved.append(e)
                return e
            result = map_bool(pred, fn)
            return None if unresolved else result
        if isinstance(stmt, If):
            then, orelse = self.block(stmt.then, pred), self.block(stmt.orelse, pred)
            if then is None or orelse is None:
                return None
            return And((Or((Not(stmt.cond), then)), Or((stmt.cond, orelse))))
        if isinstance(stmt, For):
            return None if self.hits(stmt, pred) else pred
        return None

    def block(self, seq: Seq, pred: BoolExpr) -> Optional[BoolExpr]:
        for stmt in reversed(seq.stmts):
            pred = self.backward(stmt, pred)
            if pred is None:
                return None
        return pred

    def point(self, pred: BoolExpr) -> Optional[Tuple[bool, Formula]]:
        """(stopped early, predicate) for one quantifier-free conjunct, or None."""
        start = self.simplify(pred)
        q = start
        for k in range(len(self.stmts) - 1, -1, -1):
            if q == TRUE:
                return None
            stmt, after = self.stmts[k], self.stmts[k + 1:]
            if q != start and self.settled(q, stmt, after):
                return True, QF(q)
            if isinstance(stmt, For):
                if self.hits(stmt, q):
                    q = self.through_post(q, stmt, after)
                    if q is None:
                        return None
                continue
            q = self.backward(stmt, q)
            if q is None:
                return None
            q = self.simplify(q)
        q = self.simplify(rename_names(q, self.d.snapshots))
        return None if q == TRUE else (False, QF(q))

    def untouched(self, rest: Forall) -> bool:
        """dP_N writes nothing the remainder of a split quantifier reads."""
        inside = [Rel("<=", rest.lo, Var(rest.var)), Rel("<", Var(rest.var), rest.hi)]
        for e in bool_exprs(rest.body):
            for a in sub_exprs(e):
                if isinstance(a, Var) and a.name != rest.var and a.name in self.d.written:
                    if self.may_write(self.stmts, a):
                        return False
                elif isinstance(a, Read) and a.array in self.d.written:
                    if self.may_write(self.stmts, a, inside):
                        return False
        return True

    def conjunct(self, item: Formula) -> List[Tuple[bool, Formula]]:
        if isinstance(item, QF):
            found = self.point(item.pred)
            return [] if found is None else [found]
        if isinstance(item, Forall) and not uses_param(item.lo):
            hi_prev = simplify_expr(substitute_param(item.hi, n_minus(1)))
            width = to_poly(item.hi) - to_poly(hi_prev)
            if width.is_const() and width.const_value() >= 0:
                out = []
                rest = Forall(item.var, item.lo, hi_prev, item.body)
                if self.untouched(rest):
                    out.append((False, rename_names(rest, self.d.snapshots)))
                for j in range(width.const_value()):
                    found = self.point(instantiate(item, simplify_expr(add(hi_prev, Const(j)))))
                    if found is not None:
                        out.append(found)
                return out
        logger.debug("no pre-condition computed for %s", format_formula(item))
        return []


def loop_free_wp(target: Formula, d: DiffProgram, hypotheses: Sequence[Formula] = (),
                 post_facts: Sequence[Formula] = (), session=None,
                 lower: int = 1) -> Optional[WpResult]:
    """Weakest pre-condition of `target` over the straight-line part of dP_N.

    Hypotheses are facts over snapshots and untouched inputs; they hold at every
    point of dP_N. Returns None when nothing beyond them is needed.
    """
    checker = _Checker(session, lower)
    wp = _Wp(d, hypotheses, post_facts, checker)
    at_n: List[Formula] = []
    at_nm1: List[Formula] = []
    for item in conjuncts(target):
        for stopped, formula in wp.conjunct(item):
            if stopped:
                pair = formula, to_prev(formula, d.written, d.suffix)
            else:
                pair = to_next(formula, d.written, d.suffix), formula
            if pair[1] in at_nm1 or checker.implies(hypotheses, pair[1]):
                continue
            at_n.append(pair[0])
            at_nm1.append(pair[1])
    if not at_nm1:
        return None
    result = WpResult(conj(at_n), conj(at_nm1))
    logger.debug("weakest pre-condition: %s", format_formula(result.at_nm1))
    return result


# Lifting --------------------------------------------------------------------

def lift_to_quantified(point: Formula, accept: Optional[Callable[[Formula], bool]] = None) -> Formula:
    """Generalize a predicate about cells N-1 to every index in [0, N).

    Tries the index-only form first, then the one where N co-varies with the
    index; `accept` decides which candidate is kept.
    """
    if not isinstance(point, QF):
        raise LiftFailed(format_formula(point))
    pred = point.pred
    last = n_minus(1)
    if not any(isinstance(a, Read) and same_value(a.index, last) for a in _atoms(pred)):
        raise LiftFailed(format_bool(pred))
    var = "i" if "i" not in pred_names(pred) else fresh_name("i", pred_names(pred))
    i = Var(var)
    indexed = map_bool(pred, lambda e: Read(e.array, i)
                       if isinstance(e, Read) and same_value(e.index, last) else e)
    candidates = [Forall(var, Const(0), Param(), _tidy(indexed))]
    covarying = _tidy(substitute_param(indexed, add(i, Const(1))))
    if covarying != candidates[0].body:
        candidates.append(Forall(var, Const(0), Param(), covarying))
    for candidate in candidates:
        if accept is None or accept(candidate):
            logger.info("lifted %s to %s", format_bool(pred), format_formula(candidate))
            return candidate
    raise LiftFailed(format_bool(pred))


__all__ = [
    "WpResult", "frame_conjuncts", "lift_to_quantified", "loop_free_wp",
    "syntactic_diff", "to_next", "to_prev",
]
