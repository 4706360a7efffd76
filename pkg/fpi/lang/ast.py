"""
Abstract syntax for parameterized array programs and their annotations.

All nodes are frozen dataclasses so they can be hashed, compared structurally
and used as dictionary keys (the polynomial normal form keys on atoms).
Statements carry an optional `tag` ("peel", "glue", "rect", ...) that does not
take part in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional, Tuple, Union

PARAM = "N"

ARITH_OPS = ("+", "-", "*", "/", "%", "**")
REL_OPS = ("==", "!=", "<", "<=", ">", ">=")


# Expressions ---------------------------------------------------------------

class Expr:
    """Integer-valued expression."""


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class Param(Expr):
    """The size parameter N."""


@dataclass(frozen=True)
class Var(Expr):
    """Scalar variable, or a quantifier-bound index inside a formula."""
    name: str


@dataclass(frozen=True)
class Counter(Expr):
    """Loop counter of the enclosing for-loop."""
    name: str


@dataclass(frozen=True)
class Read(Expr):
    array: str
    index: Expr


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


# Boolean expressions --------------------------------------------------------

class BoolExpr:
    """Quantifier-free predicate."""


@dataclass(frozen=True)
class BoolConst(BoolExpr):
    value: bool


@dataclass(frozen=True)
class Rel(BoolExpr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not(BoolExpr):
    operand: BoolExpr


@dataclass(frozen=True)
class And(BoolExpr):
    items: Tuple[BoolExpr, ...]


@dataclass(frozen=True)
class Or(BoolExpr):
    items: Tuple[BoolExpr, ...]


TRUE = BoolConst(True)
FALSE = BoolConst(False)


# Statements ----------------------------------------------------------------

class Stmt:
    tag: Optional[str]


@dataclass(frozen=True)
class Assign(Stmt):
    target: str
    value: Expr
    tag: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class Store(Stmt):
    array: str
    index: Expr
    value: Expr
    tag: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class Seq(Stmt):
    stmts: Tuple[Stmt, ...] = ()
    tag: Optional[str] = field(default=None, compare=False)

    def __iter__(self) -> Iterator[Stmt]:
        return iter(self.stmts)

    def __len__(self) -> int:
        return len(self.stmts)


@dataclass(frozen=True)
class If(Stmt):
    cond: BoolExpr
    then: Seq
    orelse: Seq = Seq()
    tag: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True)
class For(Stmt):
    """for (counter = 0; counter < bound; counter = counter + 1) body"""
    counter: str
    bound: Expr
    body: Seq
    tag: Optional[str] = field(default=None, compare=False)


# Formulas ------------------------------------------------------------------

class Formula:
    pass


@dataclass(frozen=True)
class Truth(Formula):
    value: bool


@dataclass(frozen=True)
class QF(Formula):
    pred: BoolExpr


@dataclass(frozen=True)
class Forall(Formula):
    """forall var in [lo, hi) :: body"""
    var: str
    lo: Expr
    hi: Expr
    body: BoolExpr


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    lo: Expr
    hi: Expr
    body: BoolExpr


@dataclass(frozen=True)
class Conj(Formula):
    items: Tuple[Formula, ...]


@dataclass(frozen=True)
class Disj(Formula):
    items: Tuple[Formula, ...]


Quantified = Union[Forall, Exists]


@dataclass(frozen=True)
class HoareTriple:
    pre: Formula
    prog: Seq
    post: Formula
    param: str = PARAM


# Construction helpers --------------------------------------------------------

def add(left: Expr, right: Expr) -> Expr:
    return BinOp("+", left, right)


def sub(left: Expr, right: Expr) -> Expr:
    return BinOp("-", left, right)


def mul(left: Expr, right: Expr) -> Expr:
    return BinOp("*", left, right)


def n_minus(k: int) -> Expr:
    return BinOp("-", Param(), Const(k)) if k else Param()


def conj(items) -> Formula:
    """Flattening conjunction; drops `true`, collapses singletons."""
    flat = []
    for item in items:
        if isinstance(item, Conj):
            flat.extend(item.items)
        elif isinstance(item, Truth) and item.value:
            continue
        elif isinstance(item, QF) and item.pred == TRUE:
            continue
        else:
            flat.append(item)
    if any(isinstance(f, Truth) and not f.value for f in flat):
        return Truth(False)
    if not flat:
        return Truth(True)
    if len(flat) == 1:
        return flat[0]
    return Conj(tuple(flat))


def disj(items) -> Formula:
    flat = []
    for item in items:
        if isinstance(item, Disj):
            flat.extend(item.items)
        elif isinstance(item, Truth) and not item.value:
            continue
        else:
            flat.append(item)
    if any(isinstance(f, Truth) and f.value for f in flat):
        return Truth(True)
    if not flat:
        return Truth(False)
    if len(flat) == 1:
        return flat[0]
    return Disj(tuple(flat))


def conjuncts(formula: Formula) -> Tuple[Formula, ...]:
    """Top-level conjuncts, splitting quantifier-free conjunctions as well."""
    if isinstance(formula, Conj):
        out = []
        for item in formula.items:
            out.extend(conjuncts(item))
        return tuple(out)
    if isinstance(formula, QF) and isinstance(formula.pred, And):
        return tuple(QF(p) for p in formula.pred.items)
    if isinstance(formula, Truth) and formula.value:
        return ()
    return (formula,)


def retag(stmt: Stmt, tag: Optional[str], deep: bool = True) -> Stmt:
    """Copy of `stmt` carrying `tag` (recursively when `deep`)."""
    if isinstance(stmt, Seq):
        return Seq(tuple(retag(s, tag, deep) for s in stmt.stmts) if deep else stmt.stmts, tag=tag)
    if isinstance(stmt, If) and deep:
        return If(stmt.cond, retag(stmt.then, tag), retag(stmt.orelse, tag), tag=tag)
    if isinstance(stmt, For) and deep:
        return For(stmt.counter, stmt.bound, retag(stmt.body, tag), tag=tag)
    return replace(stmt, tag=tag)


# Traversal -----------------------------------------------------------------

def sub_exprs(expr: Expr) -> Iterator[Expr]:
    """Pre-order walk over an expression."""
    yield expr
    if isinstance(expr, Read):
        yield from sub_exprs(expr.index)
    elif isinstance(expr, Neg):
        yield from sub_exprs(expr.operand)
    elif isinstance(expr, BinOp):
        yield from sub_exprs(expr.left)
        yield from sub_exprs(expr.right)


def bool_exprs(pred: BoolExpr) -> Iterator[Expr]:
    """Top-level expressions of a predicate."""
    if isinstance(pred, Rel):
        yield pred.left
        yield pred.right
    elif isinstance(pred, Not):
        yield from bool_exprs(pred.operand)
    elif isinstance(pred, (And, Or)):
        for item in pred.items:
            yield from bool_exprs(item)


def formula_preds(formula: Formula) -> Iterator[Tuple[BoolExpr, Tuple[str, ...]]]:
    """(predicate, bound variables) pairs of a formula."""
    if isinstance(formula, QF):
        yield formula.pred, ()
    elif isinstance(formula, (Forall, Exists)):
        yield Rel("<=", formula.lo, formula.hi), ()
        yield formula.body, (formula.var,)
    elif isinstance(formula, (Conj, Disj)):
        for item in formula.items:
            yield from formula_preds(item)


def iter_stmts(stmt: Stmt) -> Iterator[Stmt]:
    """Pre-order walk over statements (Seq nodes are skipped)."""
    if isinstance(stmt, Seq):
        for s in stmt.stmts:
            yield from iter_stmts(s)
        return
    yield stmt
    if isinstance(stmt, If):
        yield from iter_stmts(stmt.then)
        yield from iter_stmts(stmt.orelse)
    elif isinstance(stmt, For):
        yield from iter_stmts(stmt.body)


def stmt_exprs(stmt: Stmt) -> Iterator[Expr]:
    """Expressions directly owned by one (non-compound) statement."""
    if isinstance(stmt, Assign):
        yield stmt.value
    elif isinstance(stmt, Store):
        yield stmt.index
        yield stmt.value
    elif isinstance(stmt, If):
        yield from bool_exprs(stmt.cond)
    elif isinstance(stmt, For):
        yield stmt.bound


def expr_names(expr: Expr, bound: Tuple[str, ...] = ()) -> set:
    """Scalar and array names read by an expression."""
    names = set()
    for e in sub_exprs(expr):
        if isinstance(e, Var) and e.name not in bound:
            names.add(e.name)
        elif isinstance(e, Read):
            names.add(e.array)
    return names


def expr_reads(expr: Expr) -> Iterator[Read]:
    for e in sub_exprs(expr):
        if isinstance(e, Read):
            yield e


def uses_param(expr: Expr) -> bool:
    return any(isinstance(e, Param) for e in sub_exprs(expr))


def pred_names(pred: BoolExpr, bound: Tuple[str, ...] = ()) -> set:
    names = set()
    for e in bool_exprs(pred):
        names |= expr_names(e, bound)
    return names


def formula_names(formula: Formula) -> set:
    names = set()
    for pred, bound in formula_preds(formula):
        names |= pred_names(pred, bound)
    return names


def formula_uses_param(formula: Formula) -> bool:
    return any(uses_param(e) for pred, _ in formula_preds(formula) for e in bool_exprs(pred))


def written_names(stmt: Stmt) -> set:
    names = set()
    for s in iter_stmts(stmt):
        if isinstance(s, Assign):
            names.add(s.target)
        elif isinstance(s, Store):
            names.add(s.array)
    return names


def read_names(stmt: Stmt) -> set:
    names = set()
    for s in iter_stmts(stmt):
        for e in stmt_exprs(s):
            names |= expr_names(e)
    return names


def array_names(*nodes) -> set:
    """Names used as arrays anywhere in the given statements/formulas."""
    names = set()
    for node in nodes:
        if isinstance(node, Stmt):
            for s in iter_stmts(node):
                if isinstance(s, Store):
                    names.add(s.array)
                for e in stmt_exprs(s):
                    names |= {r.array for r in expr_reads(e)}
        elif isinstance(node, Formula):
            for pred, _ in formula_preds(node):
                for e in bool_exprs(pred):
                    names |= {r.array for r in expr_reads(e)}
        elif isinstance(node, BoolExpr):
            for e in bool_exprs(node):
                names |= {r.array for r in expr_reads(e)}
        elif isinstance(node, Expr):
            names |= {r.array for r in expr_reads(node)}
    return names


def loops(stmt: Stmt) -> Iterator[For]:
    for s in iter_stmts(stmt):
        if isinstance(s, For):
            yield s


def expr_size(expr: Expr) -> int:
    return sum(1 for _ in sub_exprs(expr))


ExprFn = Callable[[Expr], Expr]
