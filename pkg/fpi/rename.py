"""
Versioning of program names so that no top-level unit overwrites a value
defined by an earlier one.

A unit is a top-level statement. A unit that must not clobber the value an
earlier unit (or the initial state) left in X writes a fresh version X1, X2,
... instead. When the unit also needs the old contents, glue copies them
over first, unless the unit's reads can be split between the old and the
new version directly.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Tuple

from fpi.cfg import build_cfg
from fpi.lang.ast import (
    Assign, BoolExpr, Const, Counter, Expr, For, HoareTriple, If, Param, Read, Rel, Seq, Stmt,
    Store, Var, array_names, formula_names, iter_stmts, read_names, retag, written_names,
)
from fpi.lang.poly import to_poly
from fpi.lang.subst import map_bool, map_expr, rename_names, substitute_counter
from fpi.utils import fresh_name

logger = logging.getLogger(__name__)

GLUE = "glue"


class RenameResult(NamedTuple):
    triple: HoareTriple
    glue_nodes: FrozenSet[int]
    versions: Dict[str, Tuple[str, ...]]
    final: Dict[str, str]


def _ordered_writes(stmt: Stmt) -> List[str]:
    names: List[str] = []
    for s in iter_stmts(stmt):
        target = s.target if isinstance(s, Assign) else s.array if isinstance(s, Store) else None
        if target is not None and target not in names:
            names.append(target)
    return names


def _stores(stmt: Stmt, name: str, loop: Optional[For] = None) -> List[Tuple[Expr, Optional[For]]]:
    """Indices of every store to `name`, with the enclosing loop."""
    found = []
    if isinstance(stmt, Seq):
        for s in stmt.stmts:
            found += _stores(s, name, loop)
    elif isinstance(stmt, Store) and stmt.array == name:
        found.append((stmt.index, loop))
    elif isinstance(stmt, If):
        found += _stores(stmt.then, name, loop) + _stores(stmt.orelse, name, loop)
    elif isinstance(stmt, For):
        found += _stores(stmt.body, name, stmt)
    return found


def split_loop(loop: For, x: str, prev: str, version: str) -> Optional[Tuple[For, bool]]:
    """Rewrite a loop that writes every X[l], l in [0, N), to write `version`.

    Reads of X[l] before the write in an iteration see `prev`; reads of
    X[l - c] (c >= 1) see cells written by earlier iterations, i.e. `version`.
    Returns the rewritten loop and whether `prev` is read, or None when the
    loop does not have that shape.
    """
    if loop.bound != Param():
        return None
    ell = Counter(loop.counter)
    ok = [True]
    reads_prev = [False]

    def reader(written: Optional[bool]):
        def fn(e: Expr) -> Expr:
            if not (isinstance(e, Read) and e.array == x):
                return e
            if e.index == ell:
                if written is None:
                    ok[0] = False
                    return e
                if not written:
                    reads_prev[0] = True
                    return Read(prev, e.index)
                return Read(version, e.index)
            offset = to_poly(e.index) - to_poly(ell)
            if offset.is_const() and offset.const_value() < 0:
                return Read(version, e.index)
            ok[0] = False
            return e
        return fn

    def walk(seq: Seq, written: Optional[bool]) -> Tuple[Seq, Optional[bool]]:
        out: List[Stmt] = []
        for s in seq.stmts:
            fn = reader(written)
            if isinstance(s, Assign):
                out.append(replace(s, value=map_expr(s.value, fn)))
            elif isinstance(s, Store):
                index, value = map_expr(s.index, fn), map_expr(s.value, fn)
                if s.array == x:
                    if s.index != ell:
                        ok[0] = False
                    written = True
                    out.append(replace(s, array=version, index=index, value=value))
                else:
                    out.append(replace(s, index=index, value=value))
            elif isinstance(s, If):
                cond = map_bool(s.cond, fn)
                then, w_then = walk(s.then, written)
                orelse, w_else = walk(s.orelse, written)
                written = w_then if w_then == w_else else None
                out.append(replace(s, cond=cond, then=then, orelse=orelse))
            else:
                ok[0] = False
                out.append(s)
        return Seq(tuple(out)), written

    body, written = walk(loop.body, False)
    if not ok[0] or written is not True:
        return None
    return replace(loop, body=body), reads_prev[0]


class _Renamer:
    def __init__(self, triple: HoareTriple, session):
        self.triple = triple
        self.session = session
        prog = triple.prog
        self.arrays = array_names(triple.pre, prog, triple.post)
        self.pre_names = formula_names(triple.pre)
        counters = {s.counter for s in iter_stmts(prog) if isinstance(s, For)}
        self.taken = (read_names(prog) | written_names(prog) | self.pre_names
                      | formula_names(triple.post) | counters | {"N"})
        self.current: Dict[str, str] = {}
        self.versions: Dict[str, List[str]] = {}
        self.writes: Dict[str, List[Tuple[Expr, Optional[For]]]] = {}
        self.read_so_far: set = set()

    def fresh(self, base: str) -> str:
        name = fresh_name(base, self.taken)
        self.taken.add(name)
        return name

    def run(self) -> RenameResult:
        units = list(self.triple.prog.stmts)
        out: List[Stmt] = []
        for k, unit in enumerate(units):
            out.extend(self.unit(unit, units[k - 1] if k else None))
            self.read_so_far |= read_names(unit)
        prog = Seq(tuple(out))
        post = rename_names(self.triple.post, dict(self.current))
        triple = HoareTriple(self.triple.pre, prog, post, self.triple.param)
        glue_nodes = build_cfg(prog).nodes_tagged(GLUE)
        versions = {base: tuple(v) for base, v in self.versions.items()}
        renamed = {b: v for b, v in self.current.items() if v != b}
        if renamed:
            logger.debug("renamed %s with %d glue node(s)", renamed, len(glue_nodes))
        return RenameResult(triple, glue_nodes, versions, dict(self.current))

    def unit(self, unit: Stmt, previous: Optional[Stmt]) -> List[Stmt]:
        glue: List[Stmt] = []
        direct: Dict[str, str] = {}
        splits: Dict[str, Tuple[str, str]] = {}
        for x in _ordered_writes(unit):
            prev = self.current.get(x, x)
            is_array = x in self.arrays
            split = None
            if is_array and isinstance(unit, For):
                split = split_loop(unit, x, prev, prev)
            no_glue = isinstance(unit, Assign) or split is not None

            if x not in self.versions:
                reads_prev = split[1] if split is not None else x in read_names(unit)
                live = x in self.pre_names or x in self.read_so_far or reads_prev
                version = self.fresh(x) if live else x
            elif not is_array:
                shares = (isinstance(unit, For) and isinstance(previous, Assign)
                          and previous.target == x)
                version = prev if shares else self.fresh(x)
            else:
                version = self.fresh(x) if self.overlaps(prev, unit, x) else prev

            if version == prev:
                direct[x] = version
            elif no_glue:
                if isinstance(unit, Assign):
                    direct[x] = version
                else:
                    splits[x] = (prev, version)
            else:
                glue.append(self.glue(x, prev, version))
                direct[x] = version

            self.versions.setdefault(x, [])
            if version not in self.versions[x]:
                self.versions[x].append(version)
            if is_array:
                self.writes.setdefault(version, []).extend(_stores(unit, x))

        read_map = {y: self.current[y] for y in read_names(unit) if y in self.current}
        if isinstance(unit, Assign):
            renamed = replace(unit, target=direct[unit.target], value=rename_names(unit.value, read_map))
        else:
            renamed = unit
            for x, (prev, version) in splits.items():
                renamed, _ = split_loop(renamed, x, prev, version)
            reads = {y: v for y, v in read_map.items() if y not in direct and y not in splits}
            renamed = rename_names(renamed, {**reads, **direct})
        for x, (prev, version) in splits.items():
            self.current[x] = version
        self.current.update(direct)
        return glue + [renamed]

    def glue(self, x: str, prev: str, version: str) -> Stmt:
        if x not in self.arrays:
            return retag(Assign(version, Var(prev)), GLUE)
        counter = self.fresh(f"g_{x}")
        copy = Store(version, Counter(counter), Read(prev, Counter(counter)))
        return retag(For(counter, Param(), Seq((copy,))), GLUE)

    def overlaps(self, version: str, unit: Stmt, x: str) -> bool:
        """May a store of `unit` to x hit a cell already written into `version`?"""
        earlier = self.writes.get(version, [])
        if not earlier:
            return False
        for idx_b, loop_b in _stores(unit, x):
            for idx_a, loop_a in earlier:
                constraints: List[BoolExpr] = []
                a = _ranged(idx_a, loop_a, "__a", constraints)
                b = _ranged(idx_b, loop_b, "__b", constraints)
                constraints.append(Rel("==", a, b))
                if self.session is None or self.session.satisfiable(constraints, lower=0):
                    return True
        return False


def _ranged(index: Expr, loop: Optional[For], suffix: str, constraints: List[BoolExpr]) -> Expr:
    if loop is None:
        return index
    fresh = Counter(loop.counter + suffix)
    constraints.append(Rel("<=", Const(0), fresh))
    constraints.append(Rel("<", fresh, loop.bound))
    return substitute_counter(index, loop.counter, fresh)


def rename(triple: HoareTriple, session=None) -> RenameResult:
    """Private versions per unit, glue copies and the renamed post-condition."""
    return _Renamer(triple, session).run()


__all__ = ["rename", "RenameResult", "split_loop", "GLUE"]
