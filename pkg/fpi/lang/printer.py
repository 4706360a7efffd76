"""
Pretty printer producing re-parseable program text.
"""

from __future__ import annotations

from typing import List

from fpi.lang.ast import (
    And, Assign, BinOp, BoolConst, BoolExpr, Conj, Const, Counter, Disj, Exists, Expr,
    For, Forall, Formula, HoareTriple, If, Neg, Not, Or, Param, QF, Read, Rel, Seq,
    Stmt, Store, Truth, Var, PARAM,
)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "%": 2, "**": 4}
# unary minus sits between * and **
_UNARY = 3
_ATOM = 5


def _prec(expr: Expr) -> int:
    if isinstance(expr, BinOp):
        return _PREC[expr.op]
    if isinstance(expr, Neg) or (isinstance(expr, Const) and expr.value < 0):
        return _UNARY
    return _ATOM


def format_expr(expr: Expr) -> str:
    if isinstance(expr, Const):
        return str(expr.value)
    if isinstance(expr, Param):
        return PARAM
    if isinstance(expr, (Var, Counter)):
        return expr.name
    if isinstance(expr, Read):
        return f"{expr.array}[{format_expr(expr.index)}]"
    if isinstance(expr, Neg):
        inner = format_expr(expr.operand)
        if _prec(expr.operand) < _ATOM:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, BinOp):
        p = _PREC[expr.op]
        left = format_expr(expr.left)
        right = format_expr(expr.right)
        # ** is right-associative, everything else left-associative
        if _prec(expr.left) < p or (expr.op == "**" and _prec(expr.left) <= p):
            left = f"({left})"
        if _prec(expr.right) < p or (expr.op != "**" and _prec(expr.right) == p):
            right = f"({right})"
        if isinstance(expr.right, Const) and expr.right.value < 0:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    raise TypeError(f"not an expression: {expr!r}")


def format_bool(pred: BoolExpr, parent: int = 0) -> str:
    if isinstance(pred, BoolConst):
        return "true" if pred.value else "false"
    if isinstance(pred, Rel):
        return f"{format_expr(pred.left)} {pred.op} {format_expr(pred.right)}"
    if isinstance(pred, Not):
        return f"!({format_bool(pred.operand)})"
    if isinstance(pred, (And, Or)):
        level = 2 if isinstance(pred, And) else 1
        joiner = " && " if level == 2 else " || "
        text = joiner.join(format_bool(item, level + 1) for item in pred.items)
        return f"({text})" if parent >= level else text
    raise TypeError(f"not a predicate: {pred!r}")


def format_formula(formula: Formula, parent: int = 0) -> str:
    if isinstance(formula, Truth):
        return "true" if formula.value else "false"
    if isinstance(formula, QF):
        return format_bool(formula.pred, parent)
    if isinstance(formula, (Forall, Exists)):
        word = "forall" if isinstance(formula, Forall) else "exists"
        text = (f"{word} {formula.var} in [{format_expr(formula.lo)}, {format_expr(formula.hi)}) :: "
                f"{format_bool(formula.body)}")
        return f"({text})" if parent else text
    if isinstance(formula, (Conj, Disj)):
        level = 2 if isinstance(formula, Conj) else 1
        joiner = " && " if level == 2 else " || "
        text = joiner.join(format_formula(item, level + 1) for item in formula.items)
        return f"({text})" if parent >= level else text
    raise TypeError(f"not a formula: {formula!r}")


def format_stmt(stmt: Stmt, indent: int = 0) -> str:
    return "\n".join(_stmt_lines(stmt, indent))


def _block(seq: Seq, indent: int) -> List[str]:
    lines = []
    for s in seq.stmts:
        lines.extend(_stmt_lines(s, indent))
    return lines


def _stmt_lines(stmt: Stmt, indent: int) -> List[str]:
    pad = "  " * indent
    if isinstance(stmt, Seq):
        return _block(stmt, indent)
    if isinstance(stmt, Assign):
        return [f"{pad}{stmt.target} = {format_expr(stmt.value)};"]
    if isinstance(stmt, Store):
        return [f"{pad}{stmt.array}[{format_expr(stmt.index)}] = {format_expr(stmt.value)};"]
    if isinstance(stmt, If):
        lines = [f"{pad}if ({format_bool(stmt.cond)}) {{"]
        lines += _block(stmt.then, indent + 1)
        if stmt.orelse.stmts:
            lines.append(f"{pad}}} else {{")
            lines += _block(stmt.orelse, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    if isinstance(stmt, For):
        c = stmt.counter
        lines = [f"{pad}for ({c} = 0; {c} < {format_expr(stmt.bound)}; {c} = {c} + 1) {{"]
        lines += _block(stmt.body, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"not a statement: {stmt!r}")


def format_triple(triple: HoareTriple) -> str:
    parts = [f"assume({format_formula(triple.pre)});"]
    body = format_stmt(triple.prog)
    if body:
        parts.append(body)
    parts.append(f"assert({format_formula(triple.post)});")
    return "\n".join(parts) + "\n"
