"""
Structural rewriting: bottom-up expression maps, parameter substitution,
renaming of program names and instantiation of bound variables.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable, Dict, Union

from fpi.lang.ast import (
    And, Assign, BinOp, BoolExpr, Conj, Counter, Disj, Exists, Expr, For, Forall,
    Formula, HoareTriple, If, Neg, Not, Or, Param, QF, Read, Rel, Seq, Stmt, Store,
    Var,
)

Node = Union[Expr, BoolExpr, Stmt, Formula, HoareTriple]


def map_expr(expr: Expr, fn: Callable[[Expr], Expr]) -> Expr:
    """Rebuild `expr` bottom-up, applying `fn` to every rebuilt node."""
    if isinstance(expr, Read):
        expr = Read(expr.array, map_expr(expr.index, fn))
    elif isinstance(expr, Neg):
        expr = Neg(map_expr(expr.operand, fn))
    elif isinstance(expr, BinOp):
        expr = BinOp(expr.op, map_expr(expr.left, fn), map_expr(expr.right, fn))
    return fn(expr)


def map_bool(pred: BoolExpr, fn: Callable[[Expr], Expr]) -> BoolExpr:
    if isinstance(pred, Rel):
        return Rel(pred.op, map_expr(pred.left, fn), map_expr(pred.right, fn))
    if isinstance(pred, Not):
        return Not(map_bool(pred.operand, fn))
    if isinstance(pred, And):
        return And(tuple(map_bool(p, fn) for p in pred.items))
    if isinstance(pred, Or):
        return Or(tuple(map_bool(p, fn) for p in pred.items))
    return pred


def map_stmt(stmt: Stmt, fn: Callable[[Expr], Expr]) -> Stmt:
    """Apply `fn` to every expression of a statement tree; targets are untouched."""
    if isinstance(stmt, Assign):
        return replace(stmt, value=map_expr(stmt.value, fn))
    if isinstance(stmt, Store):
        return replace(stmt, index=map_expr(stmt.index, fn), value=map_expr(stmt.value, fn))
    if isinstance(stmt, Seq):
        return replace(stmt, stmts=tuple(map_stmt(s, fn) for s in stmt.stmts))
    if isinstance(stmt, If):
        return replace(stmt, cond=map_bool(stmt.cond, fn),
                       then=map_stmt(stmt.then, fn), orelse=map_stmt(stmt.orelse, fn))
    if isinstance(stmt, For):
        return replace(stmt, bound=map_expr(stmt.bound, fn), body=map_stmt(stmt.body, fn))
    raise TypeError(f"not a statement: {stmt!r}")


def map_formula(formula: Formula, fn: Callable[[Expr], Expr],
                bound_fn: Callable[[str], Callable[[Expr], Expr]] = None) -> Formula:
    """Apply `fn` across a formula; quantifier bodies use `bound_fn(var)` if given."""
    if isinstance(formula, QF):
        return QF(map_bool(formula.pred, fn))
    if isinstance(formula, (Forall, Exists)):
        inner = bound_fn(formula.var) if bound_fn else fn
        return type(formula)(formula.var, map_expr(formula.lo, fn), map_expr(formula.hi, fn),
                             map_bool(formula.body, inner))
    if isinstance(formula, Conj):
        return Conj(tuple(map_formula(f, fn, bound_fn) for f in formula.items))
    if isinstance(formula, Disj):
        return Disj(tuple(map_formula(f, fn, bound_fn) for f in formula.items))
    return formula


def map_node(node: Node, fn: Callable[[Expr], Expr],
             bound_fn: Callable[[str], Callable[[Expr], Expr]] = None) -> Node:
    if isinstance(node, Expr):
        return map_expr(node, fn)
    if isinstance(node, BoolExpr):
        return map_bool(node, fn)
    if isinstance(node, Stmt):
        return map_stmt(node, fn)
    if isinstance(node, Formula):
        return map_formula(node, fn, bound_fn)
    if isinstance(node, HoareTriple):
        return HoareTriple(map_formula(node.pre, fn, bound_fn), map_stmt(node.prog, fn),
                           map_formula(node.post, fn, bound_fn), node.param)
    raise TypeError(f"cannot rewrite {node!r}")


def substitute_param(node: Node, repl: Expr) -> Node:
    """Replace every occurrence of N (statements, bounds, formulas) by `repl`."""
    return map_node(node, lambda e: repl if isinstance(e, Param) else e)


def substitute_bounds(prog: Stmt, repl: Expr) -> Stmt:
    """Replace N only inside loop bounds."""
    if isinstance(prog, Seq):
        return replace(prog, stmts=tuple(substitute_bounds(s, repl) for s in prog.stmts))
    if isinstance(prog, If):
        return replace(prog, then=substitute_bounds(prog.then, repl),
                       orelse=substitute_bounds(prog.orelse, repl))
    if isinstance(prog, For):
        return replace(prog, bound=substitute_param(prog.bound, repl),
                       body=substitute_bounds(prog.body, repl))
    return prog


def _renamer(mapping: Dict[str, str], bound: tuple = ()) -> Callable[[Expr], Expr]:
    def fn(e: Expr) -> Expr:
        if isinstance(e, Var) and e.name in mapping and e.name not in bound:
            return Var(mapping[e.name])
        if isinstance(e, Read) and e.array in mapping:
            return Read(mapping[e.array], e.index)
        return e
    return fn


def rename_names(node: Node, mapping: Dict[str, str]) -> Node:
    """Rename scalar and array names (reads and write targets)."""
    if not mapping:
        return node
    if isinstance(node, Stmt):
        return _rename_stmt(node, mapping)
    if isinstance(node, HoareTriple):
        return HoareTriple(rename_names(node.pre, mapping), _rename_stmt(node.prog, mapping),
                           rename_names(node.post, mapping), node.param)
    return map_node(node, _renamer(mapping), lambda var: _renamer(mapping, (var,)))


def _rename_stmt(stmt: Stmt, mapping: Dict[str, str]) -> Stmt:
    fn = _renamer(mapping)
    if isinstance(stmt, Assign):
        return replace(stmt, target=mapping.get(stmt.target, stmt.target), value=map_expr(stmt.value, fn))
    if isinstance(stmt, Store):
        return replace(stmt, array=mapping.get(stmt.array, stmt.array),
                       index=map_expr(stmt.index, fn), value=map_expr(stmt.value, fn))
    if isinstance(stmt, Seq):
        return replace(stmt, stmts=tuple(_rename_stmt(s, mapping) for s in stmt.stmts))
    if isinstance(stmt, If):
        return replace(stmt, cond=map_bool(stmt.cond, fn), then=_rename_stmt(stmt.then, mapping),
                       orelse=_rename_stmt(stmt.orelse, mapping))
    if isinstance(stmt, For):
        return replace(stmt, bound=map_expr(stmt.bound, fn), body=_rename_stmt(stmt.body, mapping))
    raise TypeError(f"not a statement: {stmt!r}")


def substitute_var(node: Node, name: str, repl: Expr) -> Node:
    """Replace the bound variable or scalar `name` by `repl`."""
    return map_node(node, lambda e: repl if isinstance(e, Var) and e.name == name else e)


def substitute_counter(node: Node, name: str, repl: Expr) -> Node:
    return map_node(node, lambda e: repl if isinstance(e, Counter) and e.name == name else e)


def instantiate(quant: Union[Forall, "Exists"], index: Expr) -> BoolExpr:
    """Body of a quantified formula with its variable replaced by `index`."""
    return map_bool(quant.body, lambda e: index if isinstance(e, Var) and e.name == quant.var else e)


__all__ = [
    "map_expr", "map_bool", "map_stmt", "map_formula", "map_node",
    "substitute_param", "substitute_bounds", "rename_names", "substitute_var",
    "substitute_counter", "instantiate",
]
