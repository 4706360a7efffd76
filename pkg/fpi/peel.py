"""
Peeling of the iterations a loop gains when N grows by one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import List, Tuple

from fpi.cfg import Cfg, build_cfg
from fpi.errors import NonConstantPeelCount
from fpi.lang.ast import (
    Const, Expr, For, If, Read, Seq, Stmt, Store, add, n_minus, retag,
    uses_param,
)
from fpi.lang.poly import simplify_expr, to_poly
from fpi.lang.printer import format_expr
from fpi.lang.subst import map_stmt, substitute_counter, substitute_param

logger = logging.getLogger(__name__)

PEEL = "peel"
SHIFT = "shift"


@dataclass
class PeeledProgram:
    cfg: Cfg
    peel_nodes: frozenset
    counts: Tuple[int, ...]
    program: Seq


def peel_count(loop: For) -> Tuple[int, Expr]:
    """(k(N) - k(N-1), k(N-1)) for a loop; the difference must be a constant >= 0."""
    previous = simplify_expr(substitute_param(loop.bound, n_minus(1)))
    diff = to_poly(loop.bound) - to_poly(previous)
    label = f"for {loop.counter} < {format_expr(loop.bound)}"
    if not diff.is_const():
        raise NonConstantPeelCount(label, format_expr(diff.to_expr()))
    count = diff.const_value()
    if count < 0:
        raise NonConstantPeelCount(label, str(count), negative=True)
    return count, previous


def _simplify_indices(stmt: Stmt) -> Stmt:
    def fn(e: Expr) -> Expr:
        if isinstance(e, Read):
            return Read(e.array, simplify_expr(e.index))
        return e
    return _simplify_store(map_stmt(stmt, fn))


def _simplify_store(stmt: Stmt) -> Stmt:
    if isinstance(stmt, Store):
        return replace(stmt, index=simplify_expr(stmt.index))
    if isinstance(stmt, Seq):
        return replace(stmt, stmts=tuple(_simplify_store(s) for s in stmt.stmts))
    if isinstance(stmt, If):
        return replace(stmt, then=_simplify_store(stmt.then), orelse=_simplify_store(stmt.orelse))
    return stmt


def peel_iteration(loop: For, value: Expr) -> List[Stmt]:
    """Body statements of one iteration with the counter fixed to `value`."""
    body = substitute_counter(loop.body, loop.counter, value)
    return [retag(_simplify_indices(s), PEEL) for s in body.stmts]


def _peel_block(seq: Seq, counts: List[int], top: bool) -> Seq:
    out: List[Stmt] = []
    for stmt in seq.stmts:
        if isinstance(stmt, For):
            count, residual = peel_count(stmt)
            counts.append(count)
            out.append(replace(stmt, bound=residual) if count else stmt)
            for j in range(count):
                out.extend(peel_iteration(stmt, simplify_expr(add(residual, Const(j)))))
        elif isinstance(stmt, If):
            out.append(replace(stmt, then=_peel_block(stmt.then, counts, False),
                               orelse=_peel_block(stmt.orelse, counts, False)))
        elif top and isinstance(stmt, Store) and uses_param(stmt.index):
            # its cell moves with N, like a peeled iteration
            out.append(retag(stmt, SHIFT))
        else:
            out.append(stmt)
    return Seq(tuple(out))


def peel_all_loops(prog: Seq) -> PeeledProgram:
    """Residual loops run k(N-1) iterations; the extra ones follow as peel statements."""
    counts: List[int] = []
    program = _peel_block(prog, counts, True)
    cfg = build_cfg(program)
    peel_nodes = cfg.nodes_tagged(PEEL) | cfg.nodes_tagged(SHIFT)
    logger.debug("peeled %d loop(s), %d peel node(s)", len(counts), len(peel_nodes))
    return PeeledProgram(cfg, peel_nodes, tuple(counts), program)


__all__ = ["PeeledProgram", "peel_all_loops", "peel_count", "peel_iteration", "PEEL", "SHIFT"]
