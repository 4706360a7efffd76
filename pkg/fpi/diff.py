"""
Difference programs.

`program_diff` builds dP_N such that running P_{N-1} and then dP_N leaves
every name with its P_N value. Names that P writes are available to dP_N in
two versions: the current one, which starts out equal to P_{N-1}'s final
value, and a read-only snapshot `X_Nm1` of that final value. `simplify_diff`
then folds guards, rebases reads onto snapshots, substitutes known values and
accelerates or removes loops.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from math import lcm
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from fpi.cfg import Cfg, build_cfg
from fpi.errors import BranchDiffUnsupported, StaleCellError, UnsupportedOperator
from fpi.lang.ast import (
    And, Assign, BinOp, BoolConst, BoolExpr, Const, Counter, Expr, For, Formula, If, Neg,
    Not, Or, QF, Read, Rel, Seq, Stmt, Store, Var, add, bool_exprs, conjuncts, expr_names,
    formula_names, iter_stmts, mul, n_minus, pred_names, read_names, stmt_exprs, sub,
    sub_exprs, uses_param, written_names,
)
from fpi.lang.poly import Poly, decide, same_value, simplify_bool, simplify_expr, to_poly
from fpi.lang.printer import format_bool, format_expr, format_stmt
from fpi.lang.subst import map_bool, map_expr, rename_names, substitute_counter, substitute_param
from fpi.peel import PEEL, SHIFT, PeeledProgram

logger = logging.getLogger(__name__)

RECT = "rect"


def prev_suffix(depth: int) -> str:
    """Snapshot suffix for a recursion level."""
    return "_Nm1" if depth == 0 else f"_Nm1d{depth}"


@dataclass
class DiffProgram:
    prog: Seq
    affected: FrozenSet[str]
    written: FrozenSet[str]
    suffix: str = "_Nm1"

    def prev_name(self, name: str) -> str:
        return name + self.suffix

    @property
    def snapshots(self) -> Dict[str, str]:
        return {x: self.prev_name(x) for x in self.written}

    @property
    def cfg(self) -> Cfg:
        return build_cfg(self.prog)

    def loops(self) -> List[For]:
        return [s for s in iter_stmts(self.prog) if isinstance(s, For)]

    def text(self) -> str:
        return format_stmt(self.prog)


class _Context:
    """Shared state of one difference computation."""

    def __init__(self, written: Iterable[str], suffix: str, session, lower: int):
        self.written = frozenset(written)
        self.suffix = suffix
        self.session = session
        self.lower = lower
        self.snapshot_map = {x: x + suffix for x in self.written}

    def prev(self, node):
        """The N-1 run's value of a term: N shifted, P-written names read from snapshots."""
        return rename_names(substitute_param(node, n_minus(1)), self.snapshot_map)

    def satisfiable(self, constraints: Sequence[BoolExpr]) -> bool:
        if self.session is None:
            return True
        return self.session.satisfiable(constraints, lower=self.lower)

    def valid(self, goal: BoolExpr, constraints: Sequence[BoolExpr] = ()) -> bool:
        verdict = decide(goal)
        if verdict is not None:
            return verdict
        if self.session is None:
            return False
        return self.session.valid([], QF(goal), lower=self.lower, constraints=constraints)


def _loop_range(loop: Optional[For], suffix: str = "") -> Tuple[List[BoolExpr], Callable[[Expr], Expr]]:
    """Range constraints of a loop's counter, renamed with `suffix`, and the matching renamer."""
    if loop is None:
        return [], lambda e: e
    counter = Counter(loop.counter + suffix)
    constraints = [Rel("<=", Const(0), counter), Rel("<", counter, loop.bound)]
    if not suffix:
        return constraints, lambda e: e
    return constraints, lambda e: substitute_counter(e, loop.counter, counter)


def _mentions_counter(expr: Expr) -> bool:
    return any(isinstance(e, Counter) for e in sub_exprs(expr))


# NodeDiff ------------------------------------------------------------------

def _signed_terms(expr: Expr, sign: int = 1) -> List[Tuple[int, Expr]]:
    if isinstance(expr, BinOp) and expr.op == "+":
        return _signed_terms(expr.left, sign) + _signed_terms(expr.right, sign)
    if isinstance(expr, BinOp) and expr.op == "-":
        return _signed_terms(expr.left, sign) + _signed_terms(expr.right, -sign)
    if isinstance(expr, Neg):
        return _signed_terms(expr.operand, -sign)
    return [(sign, expr)]


def _factors(expr: Expr) -> List[Expr]:
    if isinstance(expr, BinOp) and expr.op == "*":
        return _factors(expr.left) + _factors(expr.right)
    return [expr]


def _product(factors: Sequence[Expr]) -> Expr:
    result = factors[0]
    for f in factors[1:]:
        result = mul(result, f)
    return result


def _with_deltas(base: Expr, terms: Sequence[Tuple[int, Expr]], ctx: _Context) -> Expr:
    """base + sum of sign * (t - t_prev), skipping terms the N-1 run computes identically."""
    result = base
    for sign, term in terms:
        previous = ctx.prev(term)
        if previous == term:
            continue
        delta = sub(term, previous)
        result = add(result, delta) if sign > 0 else sub(result, delta)
    return result


def _scaled(base: Expr, factors: Sequence[Expr], ctx: _Context) -> Expr:
    """(base * prod f) / prod f_prev over the factors that change with N."""
    changed = [f for f in factors if ctx.prev(f) != f]
    if not changed:
        return base
    return BinOp("/", mul(base, _product(changed)), _product([ctx.prev(f) for f in changed]))


def node_diff(stmt: Stmt, ctx: _Context, loop: Optional[For] = None) -> Stmt:
    """Rectified form of an assignment to an affected name."""
    where = format_stmt(stmt).strip()
    for expr in stmt_exprs(stmt):
        for e in sub_exprs(expr):
            if isinstance(e, BinOp) and e.op in ("%", "**"):
                raise UnsupportedOperator(e.op, where)
    if isinstance(stmt, Store):
        if uses_param(stmt.index):
            raise UnsupportedOperator("N-dependent index", where)
        target: Expr = Read(stmt.array, stmt.index)
        if any(isinstance(e, Read) and e.array == stmt.array and same_value(e.index, stmt.index)
               for e in sub_exprs(stmt.value)):
            raise UnsupportedOperator("read of the written cell", where)
        name = stmt.array
    else:
        target = Var(stmt.target)
        name = stmt.target
    if loop is not None:
        local = {s.target for s in iter_stmts(loop.body) if isinstance(s, Assign)} - {name}
        touched = set()
        for expr in stmt_exprs(stmt):
            touched |= expr_names(expr)
        if local & touched:
            raise UnsupportedOperator("loop-local scalar", where)
    rhs = stmt.value

    if isinstance(stmt, Assign) and name in expr_names(rhs):
        terms = _signed_terms(rhs)
        own = [k for k, (_, t) in enumerate(terms) if t == target]
        rest = [terms[k] for k in range(len(terms)) if k not in own]
        if len(own) == 1 and terms[own[0]][0] == 1 and all(name not in expr_names(t) for _, t in rest):
            return replace(stmt, value=_with_deltas(target, rest, ctx), tag=RECT)
        factors = _factors(rhs)
        others = [f for f in factors if f != target]
        if factors.count(target) == 1 and all(name not in expr_names(f) for f in others):
            return replace(stmt, value=_scaled(target, others, ctx), tag=RECT)
        raise UnsupportedOperator("self-referencing update", where)

    previous = ctx.prev(target)
    if isinstance(rhs, BinOp) and rhs.op == "*":
        value = _scaled(previous, _factors(rhs), ctx)
    elif isinstance(rhs, BinOp) and rhs.op == "/":
        value = _with_deltas(previous, [(1, rhs)], ctx)
    else:
        value = _with_deltas(previous, _signed_terms(rhs), ctx)
    return replace(stmt, value=value, tag=RECT)


# ProgramDiff ---------------------------------------------------------------

class _Differ:
    def __init__(self, peeled: PeeledProgram, affected: FrozenSet[str], ctx: _Context,
                 post: Formula):
        self.peeled = peeled
        self.affected = affected
        self.ctx = ctx
        self.post = post

    def defines_affected(self, stmt: Stmt) -> bool:
        return bool(written_names(stmt) & self.affected)

    def check_branch(self, cond: BoolExpr, loop: Optional[For]):
        text = format_bool(cond)
        if pred_names(cond) & self.affected:
            raise BranchDiffUnsupported(text)
        previous = self.ctx.prev(cond)
        if simplify_bool(previous) == simplify_bool(cond):
            return
        constraints, _ = _loop_range(loop)
        # exactly one of c, c_prev holds
        differs = And((Or((cond, previous)), Not(And((cond, previous)))))
        if self.ctx.satisfiable(constraints + [differs]):
            raise BranchDiffUnsupported(text)

    def block(self, seq: Seq, loop: Optional[For]) -> Seq:
        out: List[Stmt] = []
        for stmt in seq.stmts:
            if stmt.tag in (PEEL, SHIFT):
                out.append(stmt)
            elif isinstance(stmt, (Assign, Store)):
                if self.defines_affected(stmt):
                    out.append(node_diff(stmt, self.ctx, loop))
            elif isinstance(stmt, For):
                if self.defines_affected(stmt):
                    body = self.block(stmt.body, stmt)
                    if body.stmts:
                        out.append(replace(stmt, body=body))
            elif isinstance(stmt, If):
                then, orelse = self.block(stmt.then, loop), self.block(stmt.orelse, loop)
                if then.stmts or orelse.stmts:
                    self.check_branch(stmt.cond, loop)
                    out.append(replace(stmt, then=then, orelse=orelse))
        return Seq(tuple(out))

    def check_stale_cells(self, diff: Seq):
        program = self.peeled.program.stmts
        for k, stmt in enumerate(program):
            if stmt.tag != SHIFT:
                continue
            stale = simplify_expr(self.ctx.prev(stmt.index))
            if self._covered(diff, stmt.array, stale):
                continue
            later = read_names(Seq(program[k + 1:]))
            if stmt.array in formula_names(self.post) or stmt.array in later:
                raise StaleCellError(f"{stmt.array}[{format_expr(stale)}]")

    def _covered(self, diff: Seq, array: str, cell: Expr) -> bool:
        for stmt in diff.stmts:
            if isinstance(stmt, Store) and stmt.array == array and same_value(stmt.index, cell):
                return True
            if isinstance(stmt, For):
                ell = Counter(stmt.counter)
                if any(isinstance(s, Store) and s.array == array and s.index == ell
                       for s in stmt.body.stmts):
                    inside = And((Rel("<=", Const(0), cell), Rel("<", cell, stmt.bound)))
                    if self.ctx.valid(inside):
                        return True
        return False


def program_diff(peeled: PeeledProgram, affected: FrozenSet[str], written: Iterable[str],
                 post: Formula, session=None, lower: int = 1, depth: int = 0) -> DiffProgram:
    """dP_N: peels kept, affected assignments rectified, everything else dropped."""
    ctx = _Context(written, prev_suffix(depth), session, lower)
    differ = _Differ(peeled, frozenset(affected), ctx, post)
    prog = _prune(differ.block(peeled.program, None), ctx)
    differ.check_stale_cells(prog)
    prog = _Rebaser(ctx).run(prog)
    logger.debug("difference program:\n%s", format_stmt(prog))
    return DiffProgram(prog, frozenset(affected), ctx.written, ctx.suffix)


# Rebasing ------------------------------------------------------------------

@dataclass(frozen=True)
class _Write:
    name: str
    index: Optional[Expr]
    loop: Optional[For]
    pos: int = 0


def _loop_key(loop: Optional[For]):
    return None if loop is None else (loop.counter, loop.bound)


class _Rebaser:
    """Reads of P-written cells not yet written by dP_N become snapshot reads."""

    def __init__(self, ctx: _Context):
        self.ctx = ctx
        self.cache: Dict[tuple, bool] = {}

    def run(self, prog: Seq) -> Seq:
        return self.block(prog, [])

    def block(self, seq: Seq, writes: List[_Write]) -> Seq:
        return Seq(tuple(self.stmt(s, writes) for s in seq.stmts), tag=seq.tag)

    def stmt(self, s: Stmt, writes: List[_Write]) -> Stmt:
        fn = self.reader(writes, None, [], 0)
        if isinstance(s, Assign):
            out = replace(s, value=map_expr(s.value, fn))
            writes.append(_Write(s.target, None, None))
            return out
        if isinstance(s, Store):
            out = replace(s, index=map_expr(s.index, fn), value=map_expr(s.value, fn))
            writes.append(_Write(s.array, s.index, None))
            return out
        if isinstance(s, If):
            cond = map_bool(s.cond, fn)
            then_writes, else_writes = list(writes), list(writes)
            then = self.block(s.then, then_writes)
            orelse = self.block(s.orelse, else_writes)
            writes.extend(then_writes[len(writes):] + else_writes[len(writes):])
            return replace(s, cond=cond, then=then, orelse=orelse)
        if isinstance(s, For):
            order = {id(x): k for k, x in enumerate(iter_stmts(s.body))}
            body_writes = []
            for x in iter_stmts(s.body):
                if isinstance(x, Assign):
                    body_writes.append(_Write(x.target, None, s, order[id(x)]))
                elif isinstance(x, Store):
                    body_writes.append(_Write(x.array, x.index, s, order[id(x)]))
            body = self.loop_block(s.body, list(writes), s, body_writes, order)
            writes.extend(body_writes)
            return replace(s, body=body)
        return s

    def loop_block(self, seq: Seq, outer: List[_Write], loop: For, body_writes, order) -> Seq:
        out = []
        for s in seq.stmts:
            fn = self.reader(outer, loop, body_writes, order[id(s)])
            if isinstance(s, Assign):
                out.append(replace(s, value=map_expr(s.value, fn)))
            elif isinstance(s, Store):
                out.append(replace(s, index=map_expr(s.index, fn), value=map_expr(s.value, fn)))
            elif isinstance(s, If):
                out.append(replace(s, cond=map_bool(s.cond, fn),
                                   then=self.loop_block(s.then, outer, loop, body_writes, order),
                                   orelse=self.loop_block(s.orelse, outer, loop, body_writes, order)))
            else:
                out.append(s)
        return Seq(tuple(out), tag=seq.tag)

    def reader(self, outer: List[_Write], loop: Optional[For], body_writes: List[_Write], pos: int):
        def fn(e: Expr) -> Expr:
            if isinstance(e, Var):
                name, index = e.name, None
            elif isinstance(e, Read):
                name, index = e.array, e.index
            else:
                return e
            if name not in self.ctx.written:
                return e
            for w in outer:
                if w.name == name and self.may_alias(w, None, index, loop):
                    return e
            for w in body_writes:
                if w.name == name and self.may_alias(w, "<=" if w.pos < pos else "<", index, loop):
                    return e
            snapshot = self.ctx.snapshot_map[name]
            return Var(snapshot) if index is None else Read(snapshot, index)
        return fn

    def may_alias(self, w: _Write, order: Optional[str], index: Optional[Expr],
                  loop: Optional[For]) -> bool:
        if w.index is None or index is None:
            return True
        key = (w.index, _loop_key(w.loop), order, index, _loop_key(loop))
        if key not in self.cache:
            self.cache[key] = self._may_alias(w, order, index, loop)
        return self.cache[key]

    def _may_alias(self, w: _Write, order: Optional[str], index: Expr, loop: Optional[For]) -> bool:
        cw, fw = _loop_range(w.loop, "__w")
        cr, fr = _loop_range(loop, "__r")
        constraints = cw + cr
        if order is not None:
            constraints.append(Rel(order, Counter(w.loop.counter + "__w"),
                                   Counter(loop.counter + "__r")))
        constraints.append(Rel("==", fw(w.index), fr(index)))
        return self.ctx.satisfiable(constraints)


# Simplification ------------------------------------------------------------

def _prune(seq: Seq, ctx: _Context) -> Seq:
    """Resolve guards over N and constants only."""
    out: List[Stmt] = []
    for s in seq.stmts:
        if isinstance(s, If):
            then, orelse = _prune(s.then, ctx), _prune(s.orelse, ctx)
            verdict = decide(s.cond)
            if verdict is None and not pred_names(s.cond) and not any(
                    _mentions_counter(e) for e in bool_exprs(s.cond)):
                if ctx.valid(s.cond):
                    verdict = True
                elif ctx.valid(Not(s.cond)):
                    verdict = False
            if verdict is None:
                out.append(replace(s, then=then, orelse=orelse))
            else:
                out.extend((then if verdict else orelse).stmts)
        elif isinstance(s, For):
            out.append(replace(s, body=_prune(s.body, ctx)))
        else:
            out.append(s)
    return Seq(tuple(out), tag=seq.tag)


def _normalize(seq: Seq) -> Seq:
    out: List[Stmt] = []
    for s in seq.stmts:
        if isinstance(s, Assign):
            out.append(replace(s, value=simplify_expr(s.value)))
        elif isinstance(s, Store):
            out.append(replace(s, index=simplify_expr(s.index), value=simplify_expr(s.value)))
        elif isinstance(s, If):
            cond = simplify_bool(s.cond)
            then, orelse = _normalize(s.then), _normalize(s.orelse)
            if isinstance(cond, BoolConst):
                out.extend((then if cond.value else orelse).stmts)
            else:
                out.append(replace(s, cond=cond, then=then, orelse=orelse))
        elif isinstance(s, For):
            out.append(replace(s, bound=simplify_expr(s.bound), body=_normalize(s.body)))
        else:
            out.append(s)
    return Seq(tuple(out), tag=seq.tag)


@dataclass
class _MapFact:
    """X[l] == X_prev[l] + delta(l) for l in [0, bound) after a top-level map loop."""
    array: str
    snapshot: str
    loop: For
    delta: Expr
    position: int


class _Substituter:
    """Known values folded into rectified statements."""

    def __init__(self, d: DiffProgram, facts: Sequence[Formula], ctx: _Context):
        self.d = d
        self.ctx = ctx
        self.known: Dict[str, Expr] = {}
        self.maps: Dict[str, _MapFact] = {}
        self.points: List[Tuple[Expr, Expr]] = []
        self.stmts: List[Stmt] = []
        for fact in facts:
            for item in conjuncts(fact):
                self._add_point(item)

    def _add_point(self, item: Formula):
        if not isinstance(item, QF):
            return
        pred = simplify_bool(item.pred)
        if not (isinstance(pred, Rel) and pred.op == "=="):
            return
        atom = pred.left
        if not isinstance(atom, (Var, Read)) or expr_names(pred.right):
            return
        name = atom.name if isinstance(atom, Var) else atom.array
        if name in self.d.written or _mentions_counter(pred.right):
            return
        if isinstance(atom, Read) and (expr_names(atom.index) or _mentions_counter(atom.index)):
            return
        self.points.append((atom, pred.right))

    def point(self, e: Expr) -> Expr:
        for atom, value in self.points:
            if isinstance(e, Var) and e == atom:
                return value
            if (isinstance(e, Read) and isinstance(atom, Read) and e.array == atom.array
                    and same_value(e.index, atom.index)):
                return value
        return e

    def run(self, prog: Seq) -> Seq:
        for k, s in enumerate(prog.stmts):
            loop = s if isinstance(s, For) else None
            blocked = written_names(s) if loop is not None else set()
            s = self.rewrite(s, k, loop, blocked)
            self.stmts.append(s)
            self.update(s, k)
        return Seq(tuple(self.stmts), tag=prog.tag)

    def rewrite(self, s: Stmt, k: int, loop: Optional[For], blocked: set) -> Stmt:
        if isinstance(s, (Assign, Store)):
            if s.tag != RECT:
                return s
            fn = lambda e: self.expr(e, k, loop, blocked)
            if isinstance(s, Assign):
                return replace(s, value=fn(s.value))
            return replace(s, index=fn(s.index), value=fn(s.value))
        if isinstance(s, Seq):
            return replace(s, stmts=tuple(self.rewrite(x, k, loop, blocked) for x in s.stmts))
        if isinstance(s, If):
            return replace(s, then=self.rewrite(s.then, k, loop, blocked),
                           orelse=self.rewrite(s.orelse, k, loop, blocked))
        if isinstance(s, For):
            return replace(s, body=self.rewrite(s.body, k, loop, blocked))
        return s

    def expr(self, e: Expr, k: int, loop: Optional[For], blocked: set) -> Expr:
        def scalar(x: Expr) -> Expr:
            if isinstance(x, Var) and x.name in self.known and x.name not in blocked:
                return self.known[x.name]
            return x
        e = map_expr(map_expr(e, scalar), self.point)
        reads = [r for r in sub_exprs(e) if isinstance(r, Read)]
        table: Dict[Expr, Expr] = {}
        for r in reads:
            fact = self.maps.get(r.array)
            if fact is None or r.array in blocked or r in table:
                continue
            if not any(isinstance(p, Read) and p.array == fact.snapshot and same_value(p.index, r.index)
                       for p in reads):
                continue
            if self._applies(fact, r.index, k, loop):
                table[r] = add(Read(fact.snapshot, r.index),
                               substitute_counter(fact.delta, fact.loop.counter, r.index))
        if table:
            e = map_expr(e, lambda x: table.get(x, x))
        return simplify_expr(e)

    def _applies(self, fact: _MapFact, index: Expr, k: int, loop: Optional[For]) -> bool:
        constraints, _ = _loop_range(loop)
        inside = And((Rel("<=", Const(0), index), Rel("<", index, fact.loop.bound)))
        if not self.ctx.valid(inside, constraints):
            return False
        for s in self.stmts[fact.position + 1:k]:
            w_loop = s if isinstance(s, For) else None
            for x in iter_stmts(s):
                if isinstance(x, Store) and x.array == fact.array:
                    cw, fw = _loop_range(w_loop, "__w")
                    cr, fr = _loop_range(loop, "__r")
                    if self.ctx.satisfiable(cw + cr + [Rel("==", fw(x.index), fr(index))]):
                        return False
                elif isinstance(x, Assign) and x.target == fact.array:
                    return False
        return True

    def update(self, s: Stmt, k: int):
        whole = {x.target for x in iter_stmts(s) if isinstance(x, Assign)}
        for name in written_names(s):
            self.known.pop(name, None)
            # single stores are alias-checked by _applies
            if isinstance(s, For) or name in whole:
                self.maps.pop(name, None)
        if isinstance(s, Assign):
            names = expr_names(s.value)
            if not names & self.d.written:
                self.known[s.target] = map_expr(s.value, self.point)
        elif isinstance(s, For):
            fact = self._map_fact(s, k)
            if fact is not None:
                self.maps[fact.array] = fact

    def _map_fact(self, loop: For, k: int) -> Optional[_MapFact]:
        if len(loop.body.stmts) != 1 or not isinstance(loop.body.stmts[0], Store):
            return None
        store = loop.body.stmts[0]
        ell = Counter(loop.counter)
        if store.index != ell:
            return None
        snapshot = self.d.prev_name(store.array)
        split = to_poly(store.value).linear_split(Read(snapshot, ell))
        if split is None or split[0] != 1:
            return None
        delta = split[1].to_expr()
        names = expr_names(delta)
        if names & self.d.written or snapshot in names:
            return None
        return _MapFact(store.array, snapshot, loop, delta, k)


# Faulhaber: sum_{k<B} k^j == num_j(B) / den_j
_POWER_SUMS = (
    ((0, 1), 1),
    ((0, -1, 1), 2),
    ((0, 1, -3, 2), 6),
    ((0, 0, 1, -2, 1), 4),
)


def _power_sum(bound: Poly, j: int) -> Tuple[Poly, int]:
    coefficients, den = _POWER_SUMS[j]
    num = Poly()
    for power, c in enumerate(coefficients):
        if c:
            num = num + bound.power(power).scale(c)
    return num, den


def _by_power(poly: Poly, atom: Expr) -> Optional[Dict[int, Poly]]:
    """Coefficients of `poly` as a polynomial in `atom`; None when an atom hides it."""
    out: Dict[int, Poly] = {}
    for m, c in poly.terms.items():
        k = 0
        rest = []
        for a, p in m:
            if a == atom:
                k = p
            elif _mentions_counter(a):
                return None
            else:
                rest.append((a, p))
        out[k] = out.get(k, Poly()) + Poly({tuple(rest): c})
    return out


def _accelerate(loop: For, ctx: _Context) -> Optional[Stmt]:
    """Closed form of a single-assignment accumulation loop."""
    if len(loop.body.stmts) != 1 or not isinstance(loop.body.stmts[0], Assign):
        return None
    stmt = loop.body.stmts[0]
    w = Var(stmt.target)
    if not ctx.valid(Rel(">=", loop.bound, Const(0))):
        return None
    ell = Counter(loop.counter)

    def invariant(e: Expr) -> bool:
        return not _mentions_counter(e) and stmt.target not in expr_names(e)

    split = to_poly(stmt.value).linear_split(w)
    if split is not None and split[0] == 1:
        rest = split[1]
        if any(stmt.target in expr_names(a) for a in rest.atoms()):
            return None
        powers = _by_power(rest, ell)
        if powers is None or max(powers, default=0) >= len(_POWER_SUMS):
            return None
        bound = to_poly(loop.bound)
        sums = {j: _power_sum(bound, j) for j in powers}
        den = lcm(*(d for _, d in sums.values())) if sums else 1
        total = Poly()
        for j, coefficient in powers.items():
            num, d = sums[j]
            total = total + coefficient * num.scale(den // d)
        if total.divisible_by(den):
            increment = total.exact_div(den).to_expr()
        else:
            increment = BinOp("/", total.to_expr(), Const(den))
        return Assign(stmt.target, add(w, increment), tag=RECT)

    value = stmt.value
    if (isinstance(value, BinOp) and value.op == "/" and value.left == w and invariant(value.right)
            and ctx.valid(Rel(">", value.right, Const(0)))):
        return Assign(stmt.target, BinOp("/", w, BinOp("**", value.right, loop.bound)), tag=RECT)
    factors = _factors(value)
    if factors.count(w) == 1 and all(invariant(f) for f in factors if f != w):
        others = [f for f in factors if f != w]
        if not others:
            return None
        return Assign(stmt.target, mul(w, BinOp("**", _product(others), loop.bound)), tag=RECT)
    return None


def _accelerate_all(seq: Seq, ctx: _Context) -> Seq:
    out: List[Stmt] = []
    for s in seq.stmts:
        if isinstance(s, For):
            closed = _accelerate(s, ctx)
            if closed is not None:
                logger.debug("accelerated loop over %s: %s", s.counter, format_stmt(closed).strip())
                out.append(closed)
                continue
        out.append(s)
    return Seq(tuple(out), tag=seq.tag)


def _is_noop(s: Stmt) -> bool:
    if isinstance(s, Assign):
        return s.value == Var(s.target)
    if isinstance(s, Store):
        return isinstance(s.value, Read) and s.value.array == s.array and same_value(s.value.index, s.index)
    return False


def _remove(seq: Seq, d: DiffProgram, top: bool, written_before: Optional[set] = None) -> Seq:
    written_before = set() if written_before is None else written_before
    out: List[Stmt] = []
    for s in seq.stmts:
        if _is_noop(s):
            continue
        if isinstance(s, If):
            s = replace(s, then=_remove(s.then, d, False, set(written_before)),
                        orelse=_remove(s.orelse, d, False, set(written_before)))
            if not s.then.stmts and not s.orelse.stmts:
                continue
        elif isinstance(s, For):
            s = replace(s, body=_remove(s.body, d, False, set(written_before)))
            if not s.body.stmts:
                continue
            if top and _is_copy_loop(s, d) and s.body.stmts[0].array not in written_before:
                continue
        elif top and isinstance(s, Assign) and s.target not in written_before:
            if s.value == Var(d.prev_name(s.target)):
                continue
        written_before |= written_names(s)
        out.append(s)
    return Seq(tuple(out), tag=seq.tag)


def _is_copy_loop(loop: For, d: DiffProgram) -> bool:
    if len(loop.body.stmts) != 1 or not isinstance(loop.body.stmts[0], Store):
        return False
    store = loop.body.stmts[0]
    ell = Counter(loop.counter)
    return store.index == ell and store.value == Read(d.prev_name(store.array), ell)


def simplify_diff(d: DiffProgram, facts: Sequence[Formula] = (), session=None,
                  lower: int = 1) -> DiffProgram:
    """Fold guards, rebase, substitute known values, accelerate and drop no-ops."""
    ctx = _Context(d.written, d.suffix, session, lower)
    prog = _prune(d.prog, ctx)
    prog = _Rebaser(ctx).run(prog)
    prog = _normalize(prog)
    prog = _normalize(_Substituter(d, facts, ctx).run(prog))
    prog = _normalize(_accelerate_all(prog, ctx))
    prog = _remove(prog, d, True)
    logger.debug("simplified difference program:\n%s", format_stmt(prog))
    return replace(d, prog=prog)


__all__ = [
    "DiffProgram", "RECT", "node_diff", "program_diff", "prev_suffix", "simplify_diff",
]
