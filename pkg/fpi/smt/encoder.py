"""
Translation of programs and formulas into z3 terms.

Programs are executed symbolically: every name maps to a z3 term for its
current value, branches merge with `If`, loops are unrolled for a concrete N
or replaced by quantified summaries for a symbolic N. A `VcQuery` is a
refutation query: it is unsat exactly when the triple holds.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import z3

from fpi.errors import ResidualLoop, UnrollBoundUndefined
from fpi.lang.ast import (
    And, Assign, BinOp, BoolConst, BoolExpr, Conj, Const, Counter, Disj, Exists, Expr,
    For, Forall, Formula, HoareTriple, If, Neg, Not, Or, Param, QF, Read, Rel, Seq,
    Stmt, Store, Truth, Var, array_names, formula_names, iter_stmts, stmt_exprs, sub_exprs,
    written_names,
)
from fpi.lang.printer import format_expr, format_stmt

logger = logging.getLogger(__name__)

_POW = z3.Function("pow_int", z3.IntSort(), z3.IntSort(), z3.IntSort())

_ids = itertools.count()


def _fresh(prefix: str) -> str:
    return f"{prefix}!{next(_ids)}"


class Env:
    """Current z3 value of every program name."""

    def __init__(self, arrays: Set[str], n_term: z3.ArithRef, alias: Optional[Dict[str, str]] = None):
        self.arrays = set(arrays)
        self.n = n_term
        self.alias = dict(alias or {})
        self.values: Dict[str, z3.ExprRef] = {}
        self.bound: Dict[str, z3.ExprRef] = {}

    def copy(self) -> "Env":
        env = Env(self.arrays, self.n, self.alias)
        env.values = dict(self.values)
        env.bound = dict(self.bound)
        return env

    def bind(self, name: str, term: z3.ExprRef) -> "Env":
        env = self.copy()
        env.bound[name] = term
        return env

    def initial(self, name: str) -> z3.ExprRef:
        const_name = self.alias.get(name, name)
        if name in self.arrays:
            return z3.Array(const_name, z3.IntSort(), z3.IntSort())
        return z3.Int(const_name)

    def lookup(self, name: str) -> z3.ExprRef:
        if name in self.bound:
            return self.bound[name]
        if name not in self.values:
            self.values[name] = self.initial(name)
        return self.values[name]

    def assign(self, name: str, term: z3.ExprRef):
        self.values[name] = term


def encode_expr(expr: Expr, env: Env) -> z3.ArithRef:
    if isinstance(expr, Const):
        return z3.IntVal(expr.value)
    if isinstance(expr, Param):
        return env.n
    if isinstance(expr, (Var, Counter)):
        return env.lookup(expr.name)
    if isinstance(expr, Read):
        return z3.Select(env.lookup(expr.array), encode_expr(expr.index, env))
    if isinstance(expr, Neg):
        return -encode_expr(expr.operand, env)
    if isinstance(expr, BinOp):
        left = encode_expr(expr.left, env)
        right = encode_expr(expr.right, env)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if expr.op == "/":
            return left / right
        if expr.op == "%":
            return left % right
        if expr.op == "**":
            if isinstance(expr.right, Const) and 0 <= expr.right.value <= 16:
                result = z3.IntVal(1)
                for _ in range(expr.right.value):
                    result = result * left
                return result
            return _POW(left, right)
    raise TypeError(f"cannot encode {expr!r}")


def encode_bool(pred: BoolExpr, env: Env) -> z3.BoolRef:
    if isinstance(pred, BoolConst):
        return z3.BoolVal(pred.value)
    if isinstance(pred, Rel):
        left, right = encode_expr(pred.left, env), encode_expr(pred.right, env)
        return {"==": lambda: left == right, "!=": lambda: left != right,
                "<": lambda: left < right, "<=": lambda: left <= right,
                ">": lambda: left > right, ">=": lambda: left >= right}[pred.op]()
    if isinstance(pred, Not):
        return z3.Not(encode_bool(pred.operand, env))
    if isinstance(pred, And):
        return z3.And([encode_bool(p, env) for p in pred.items])
    if isinstance(pred, Or):
        return z3.Or([encode_bool(p, env) for p in pred.items])
    raise TypeError(f"cannot encode {pred!r}")


def encode_formula(formula: Formula, env: Env) -> z3.BoolRef:
    """Direct encoding with z3 quantifiers."""
    if isinstance(formula, Truth):
        return z3.BoolVal(formula.value)
    if isinstance(formula, QF):
        return encode_bool(formula.pred, env)
    if isinstance(formula, (Forall, Exists)):
        v = z3.Int(_fresh(formula.var))
        inner = env.bind(formula.var, v)
        guard = z3.And(encode_expr(formula.lo, env) <= v, v < encode_expr(formula.hi, env))
        body = encode_bool(formula.body, inner)
        if isinstance(formula, Forall):
            return z3.ForAll([v], z3.Implies(guard, body))
        return z3.Exists([v], z3.And(guard, body))
    if isinstance(formula, Conj):
        return z3.And([encode_formula(f, env) for f in formula.items])
    if isinstance(formula, Disj):
        return z3.Or([encode_formula(f, env) for f in formula.items])
    raise TypeError(f"cannot encode {formula!r}")


def _as_int(term: z3.ArithRef) -> Optional[int]:
    value = z3.simplify(term)
    if z3.is_int_value(value):
        return value.as_long()
    return None


@dataclass
class QuantFact:
    """forall t. guard(t) -> body(t), kept both as z3 ForAll and as an instantiator."""
    label: str
    guard: Callable[[z3.ArithRef], z3.BoolRef]
    body: Callable[[z3.ArithRef], z3.BoolRef]

    def instance(self, t: z3.ArithRef) -> z3.BoolRef:
        return z3.Implies(self.guard(t), self.body(t))

    def quantified(self) -> z3.BoolRef:
        v = z3.Int(_fresh("q"))
        return z3.ForAll([v], self.instance(v))


@dataclass
class VcQuery:
    """Refutation query: unsat means the encoded claim holds."""
    label: str
    ground: List[z3.BoolRef] = field(default_factory=list)
    facts: List[QuantFact] = field(default_factory=list)
    negated_goal: z3.BoolRef = field(default_factory=lambda: z3.BoolVal(True))
    extra_terms: List[z3.ArithRef] = field(default_factory=list)
    n_value: Optional[int] = None
    model_scalars: List[str] = field(default_factory=list)
    model_arrays: List[str] = field(default_factory=list)
    final_env: Optional[Env] = None
    initial_env: Optional[Env] = None
    description: str = ""

    def index_terms(self, terms: Iterable[z3.ExprRef]) -> List[z3.ArithRef]:
        found: Dict[int, z3.ArithRef] = {}
        todo = list(terms)
        seen = set()
        while todo:
            t = todo.pop()
            if t.get_id() in seen:
                continue
            seen.add(t.get_id())
            if z3.is_quantifier(t) or z3.is_var(t):
                continue
            if z3.is_select(t):
                idx = t.arg(1)
                if not z3.is_var(idx):
                    found[idx.get_id()] = idx
            todo.extend(t.children())
        for t in self.extra_terms:
            found[t.get_id()] = t
        return list(found.values())

    def instances(self, rounds: int = 2) -> List[z3.BoolRef]:
        assertions = list(self.ground) + [self.negated_goal]
        produced: List[z3.BoolRef] = []
        done = set()
        for _ in range(rounds):
            new = []
            for t in self.index_terms(assertions + produced):
                for k, fact in enumerate(self.facts):
                    key = (k, t.get_id())
                    if key in done:
                        continue
                    done.add(key)
                    new.append(fact.instance(t))
            if not new:
                break
            produced.extend(new)
        return produced

    def assertions(self, quantified: bool) -> List[z3.BoolRef]:
        result = list(self.ground) + self.instances()
        if quantified:
            result += [f.quantified() for f in self.facts]
        result.append(self.negated_goal)
        return result

    def to_smt2(self, quantified: bool = True) -> str:
        solver = z3.Solver()
        for a in self.assertions(quantified):
            solver.add(a)
        header = f"; {self.label}\n"
        if self.description:
            header += "".join(f"; {line}\n" for line in self.description.splitlines())
        return header + solver.to_smt2()


class VcBuilder:
    """Collects hypotheses and goals, then negates the goals into a VcQuery."""

    def __init__(self, label: str, lower: Optional[int] = None, n_value: Optional[int] = None):
        self.label = label
        self.n_value = n_value
        self.n = z3.IntVal(n_value) if n_value is not None else z3.Int("N")
        self.ground: List[z3.BoolRef] = []
        self.facts: List[QuantFact] = []
        self.goals: List[z3.BoolRef] = []
        self.skolems: List[z3.ArithRef] = []
        self.path: List[z3.BoolRef] = []
        if n_value is None and lower is not None:
            self.ground.append(self.n > lower)

    # hypotheses

    def assume_term(self, term: z3.BoolRef):
        self.ground.append(term)

    def assume_forall(self, label, guard, body):
        self.facts.append(QuantFact(label, guard, body))

    def assume(self, formula: Formula, env: Env):
        if isinstance(formula, Truth):
            if not formula.value:
                self.ground.append(z3.BoolVal(False))
        elif isinstance(formula, QF):
            self.ground.append(encode_bool(formula.pred, env))
        elif isinstance(formula, Conj):
            for item in formula.items:
                self.assume(item, env)
        elif isinstance(formula, Forall):
            bounds = self._concrete_range(formula, env)
            if bounds is not None:
                for k in range(*bounds):
                    self.ground.append(encode_bool(formula.body, env.bind(formula.var, z3.IntVal(k))))
            else:
                self.facts.append(_range_fact(formula, env))
        elif isinstance(formula, Exists):
            bounds = self._concrete_range(formula, env)
            if bounds is not None:
                self.ground.append(z3.Or([z3.BoolVal(False)] + [
                    encode_bool(formula.body, env.bind(formula.var, z3.IntVal(k)))
                    for k in range(*bounds)]))
            else:
                sk = z3.Int(_fresh(f"w_{formula.var}"))
                self.skolems.append(sk)
                inner = env.bind(formula.var, sk)
                self.ground.append(z3.And(encode_expr(formula.lo, env) <= sk,
                                          sk < encode_expr(formula.hi, env),
                                          encode_bool(formula.body, inner)))
        else:
            self.ground.append(encode_formula(formula, env))

    # goals

    def prove_term(self, term: z3.BoolRef):
        cond = z3.And(self.path) if self.path else None
        self.goals.append(z3.Implies(cond, term) if cond is not None else term)

    def prove_forall(self, guard, body):
        """Goal forall t. guard(t) -> body(t), refuted through a fresh skolem."""
        sk = z3.Int(_fresh("k"))
        self.skolems.append(sk)
        self.prove_term(z3.Implies(guard(sk), body(sk)))

    def prove(self, formula: Formula, env: Env):
        if isinstance(formula, Truth):
            if not formula.value:
                self.goals.append(z3.BoolVal(False))
        elif isinstance(formula, QF):
            self.prove_term(encode_bool(formula.pred, env))
        elif isinstance(formula, Conj):
            for item in formula.items:
                self.prove(item, env)
        elif isinstance(formula, Forall):
            bounds = self._concrete_range(formula, env)
            if bounds is not None:
                for k in range(*bounds):
                    self.prove_term(encode_bool(formula.body, env.bind(formula.var, z3.IntVal(k))))
            else:
                lo, hi = encode_expr(formula.lo, env), encode_expr(formula.hi, env)
                self.prove_forall(lambda t: z3.And(lo <= t, t < hi),
                                  lambda t: encode_bool(formula.body, env.bind(formula.var, t)))
        else:
            self.prove_term(encode_formula(formula, env))

    def _concrete_range(self, formula, env: Env) -> Optional[Tuple[int, int]]:
        if self.n_value is None:
            return None
        lo, hi = _as_int(encode_expr(formula.lo, env)), _as_int(encode_expr(formula.hi, env))
        if lo is None or hi is None:
            return None
        return lo, max(lo, hi)

    def build(self, satisfiability: bool = False, **kwargs) -> VcQuery:
        if satisfiability:
            negated = z3.BoolVal(True)
        else:
            negated = z3.Not(z3.And(self.goals)) if self.goals else z3.BoolVal(False)
        extra = list(self.skolems)
        if self.n_value is None:
            extra += [z3.IntVal(0), self.n - 1, self.n - 2, self.n - 3]
        return VcQuery(self.label, list(self.ground), list(self.facts), negated, extra,
                       self.n_value, **kwargs)


def _range_fact(formula: Forall, env: Env) -> QuantFact:
    lo, hi = encode_expr(formula.lo, env), encode_expr(formula.hi, env)
    return QuantFact(formula.var,
                     lambda t: z3.And(lo <= t, t < hi),
                     lambda t: encode_bool(formula.body, env.bind(formula.var, t)))


# Symbolic execution --------------------------------------------------------

class Executor:
    """Runs statements over an Env, recording division obligations as goals."""

    def __init__(self, builder: VcBuilder, bounded: bool, havoc: bool = False):
        self.builder = builder
        self.bounded = bounded
        self.havoc = havoc
        self.loop_ids = itertools.count()

    def run(self, stmt: Stmt, env: Env) -> Env:
        if isinstance(stmt, Seq):
            for s in stmt.stmts:
                env = self.run(s, env)
            return env
        if isinstance(stmt, Assign):
            self._obligations(stmt, env)
            env.assign(stmt.target, encode_expr(stmt.value, env))
            return env
        if isinstance(stmt, Store):
            self._obligations(stmt, env)
            array = env.lookup(stmt.array)
            env.assign(stmt.array, z3.Store(array, encode_expr(stmt.index, env),
                                            encode_expr(stmt.value, env)))
            return env
        if isinstance(stmt, If):
            cond = encode_bool(stmt.cond, env)
            self.builder.path.append(cond)
            then_env = self.run(stmt.then, env.copy())
            self.builder.path[-1] = z3.Not(cond)
            else_env = self.run(stmt.orelse, env.copy())
            self.builder.path.pop()
            merged = env.copy()
            for name in set(then_env.values) | set(else_env.values):
                a, b = then_env.lookup(name), else_env.lookup(name)
                merged.assign(name, a if a.eq(b) else z3.If(cond, a, b))
            return merged
        if isinstance(stmt, For):
            if self.bounded:
                return self._unroll(stmt, env)
            return self._summarize(stmt, env)
        raise TypeError(f"cannot execute {stmt!r}")

    def _obligations(self, stmt: Stmt, env: Env):
        for expr in stmt_exprs(stmt):
            for e in sub_exprs(expr):
                if isinstance(e, BinOp) and e.op in ("/", "%"):
                    self.builder.prove_term(encode_expr(e.right, env) != 0)

    def _unroll(self, loop: For, env: Env) -> Env:
        count = _as_int(encode_expr(loop.bound, env))
        if count is None or count < 0:
            raise UnrollBoundUndefined(format_expr(loop.bound), self.builder.n_value)
        for k in range(count):
            env = self.run(loop.body, env.bind(loop.counter, z3.IntVal(k)))
            env.bound.pop(loop.counter, None)
        return env

    def _summarize(self, loop: For, env: Env) -> Env:
        target = map_loop_target(loop)
        if target is None and self.havoc:
            return self._havoc(loop, env)
        if target is None:
            raise ResidualLoop(format_stmt(loop).splitlines()[0])
        before = env.lookup(target)
        bound = encode_expr(loop.bound, env)
        result = z3.Array(f"{target}__loop{next(self.loop_ids)}", z3.IntSort(), z3.IntSort())
        snapshot = env.copy()

        def cell(t):
            inner = snapshot.bind(loop.counter, t)
            out = self.run_iteration(loop.body, inner)
            return z3.Select(out.lookup(target), t)

        builder = self.builder
        builder.assume_forall(f"{target} loop", lambda t: z3.And(0 <= t, t < bound),
                              lambda t: z3.Select(result, t) == cell(t))
        builder.assume_forall(f"{target} frame", lambda t: z3.Or(t < 0, t >= bound),
                              lambda t: z3.Select(result, t) == z3.Select(before, t))
        env.assign(target, result)
        return env

    def _havoc(self, loop: For, env: Env) -> Env:
        """Forget everything the loop writes; loops that divide keep their obligations."""
        if any(isinstance(e, BinOp) and e.op in ("/", "%")
               for s in iter_stmts(loop.body) for x in stmt_exprs(s) for e in sub_exprs(x)):
            raise ResidualLoop(format_stmt(loop).splitlines()[0])
        k = next(self.loop_ids)
        for name in sorted(written_names(loop)):
            if name in env.arrays:
                env.assign(name, z3.Array(f"{name}__havoc{k}", z3.IntSort(), z3.IntSort()))
            else:
                env.assign(name, z3.Int(f"{name}__havoc{k}"))
        return env

    def run_iteration(self, body: Seq, env: Env) -> Env:
        """One loop iteration without recording obligations."""
        saved_goals, saved_path = list(self.builder.goals), list(self.builder.path)
        try:
            return self.run(body, env)
        finally:
            self.builder.goals, self.builder.path = saved_goals, saved_path


def map_loop_target(loop: For) -> Optional[str]:
    """Array written by a loop that writes only X[counter] and reads X only at counter."""
    targets = set()
    for s in iter_stmts(loop.body):
        if isinstance(s, Assign):
            return None
        if isinstance(s, Store):
            if s.index != Counter(loop.counter):
                return None
            targets.add(s.array)
    if len(targets) != 1:
        return None
    target = targets.pop()
    for s in iter_stmts(loop.body):
        for expr in stmt_exprs(s):
            for e in sub_exprs(expr):
                if isinstance(e, Read) and e.array == target and e.index != Counter(loop.counter):
                    return None
    return target


# Queries -------------------------------------------------------------------

def _model_names(triple: HoareTriple) -> Tuple[List[str], List[str]]:
    arrays = array_names(triple.pre, triple.prog, triple.post)
    scalars = set()
    for s in iter_stmts(triple.prog):
        for expr in stmt_exprs(s):
            scalars |= {e.name for e in sub_exprs(expr) if isinstance(e, Var)}
    scalars |= {n for n in formula_names(triple.pre) | formula_names(triple.post) if n not in arrays}
    return sorted(scalars - arrays), sorted(arrays)


def encode_bounded_triple(triple: HoareTriple, n: int, label: str = "") -> VcQuery:
    """Refutation query for {pre} P {post} at the concrete size N = n."""
    arrays = array_names(triple.pre, triple.prog, triple.post)
    builder = VcBuilder(label or f"bounded N={n}", n_value=n)
    env = Env(arrays, builder.n)
    scalars, array_list = _model_names(triple)
    for name in scalars + array_list:
        env.lookup(name)
    initial = env.copy()
    builder.assume(triple.pre, initial.copy())
    final = Executor(builder, bounded=True).run(triple.prog, env)
    builder.prove(triple.post, final)
    return builder.build(model_scalars=scalars, model_arrays=array_list,
                         final_env=final, initial_env=initial)


def encode_inductive_triple(pre: Sequence[Formula], prog: Seq, post: Formula,
                            written: Iterable[str], prev_name: Callable[[str], str],
                            lower: int, label: str = "inductive", havoc: bool = False) -> VcQuery:
    """Refutation query for {pre} dP_N {post} with symbolic N > lower.

    Names in `written` start equal to their snapshots `prev_name(X)`. With
    `havoc`, loops without a summary forget what they write instead of raising.
    """
    arrays = array_names(prog, post, *pre)
    written = set(written)
    arrays |= {prev_name(a) for a in arrays if a in written}
    arrays |= {a for a in written if prev_name(a) in arrays}
    builder = VcBuilder(label, lower=lower)
    env = Env(arrays, builder.n, {x: prev_name(x) for x in written})
    for formula in pre:
        builder.assume(formula, env.copy())
    final = Executor(builder, bounded=False, havoc=havoc).run(prog, env)
    builder.prove(post, final)
    return builder.build()


def encode_validity(hypotheses: Sequence[Formula], goal: Formula, lower: Optional[int] = None,
                    constraints: Sequence[BoolExpr] = (), label: str = "validity") -> VcQuery:
    """Refutation query for hypotheses /\\ constraints -> goal over symbolic N."""
    arrays = array_names(goal, *hypotheses, *constraints)
    builder = VcBuilder(label, lower=lower)
    env = Env(arrays, builder.n)
    for formula in hypotheses:
        builder.assume(formula, env)
    for pred in constraints:
        builder.assume_term(encode_bool(pred, env))
    builder.prove(goal, env)
    return builder.build()


def encode_satisfiability(constraints: Sequence[BoolExpr], lower: Optional[int] = None,
                          hypotheses: Sequence[Formula] = (), label: str = "sat") -> VcQuery:
    """Query that is sat exactly when the constraints are jointly satisfiable."""
    arrays = array_names(*constraints, *hypotheses)
    builder = VcBuilder(label, lower=lower)
    env = Env(arrays, builder.n)
    for formula in hypotheses:
        builder.assume(formula, env)
    for pred in constraints:
        builder.assume_term(encode_bool(pred, env))
    return builder.build(satisfiability=True)
