"""
Data dependences of a peeled program and the names they make N-dependent.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from fpi.cfg import Cfg, NodeKind, avoids, reachable_via, reaches
from fpi.lang.ast import (
    BoolExpr, Const, Counter, Expr, Not, Param, Read, Rel, Store, Var, n_minus,
)
from fpi.lang.poly import same_value
from fpi.lang.subst import map_bool, map_expr
from fpi.peel import PeeledProgram

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


@dataclass
class Ddg:
    cfg: Cfg
    edges: FrozenSet[Edge]
    peel_nodes: FrozenSet[int] = frozenset()
    _succ: Dict[int, List[int]] = field(default_factory=dict, repr=False)

    def successors(self, n: int) -> List[int]:
        if not self._succ:
            for src, dst in sorted(self.edges):
                self._succ.setdefault(src, []).append(dst)
        return self._succ.get(n, [])


def _side(suffix: str, fresh_state: bool):
    """Renamer applied to one end of a dependence query."""
    def fn(e: Expr) -> Expr:
        if isinstance(e, Counter):
            return Counter(e.name + suffix)
        if fresh_state and isinstance(e, Var):
            return Var(e.name + suffix)
        if fresh_state and isinstance(e, Read):
            return Read(e.array + suffix, e.index)
        return e
    return fn


class _Analysis:
    def __init__(self, peeled: PeeledProgram, session):
        self.cfg = peeled.cfg
        self.peel = peeled.peel_nodes
        self.session = session
        self.atoms = self.cfg.atoms()
        self.du = {n: self.cfg.def_uses(n) for n in self.atoms}

    # D2(a)

    def context(self, n: int, suffix: str, fresh_state: bool) -> List[BoolExpr]:
        node = self.cfg.nodes[n]
        fn = _side(suffix, fresh_state)
        constraints: List[BoolExpr] = []
        if node.loop is not None:
            loop = self.cfg.loops[node.loop]
            counter = Counter(loop.counter + suffix)
            constraints += [Rel("<=", Const(0), counter), Rel("<", counter, loop.bound)]
        for cond, polarity in node.guards:
            pred = map_bool(cond, fn)
            constraints.append(pred if polarity else Not(pred))
        return constraints

    def overlap(self, n: int, m: int, index_n: Expr, index_m: Expr) -> bool:
        """May the cell written at n equal the cell accessed at m afterwards?"""
        constraints = self.context(n, "__a", False) + self.context(m, "__b", True)
        loop_n, loop_m = self.cfg.nodes[n].loop, self.cfg.nodes[m].loop
        if loop_n is not None and loop_n == loop_m:
            counter = self.cfg.loops[loop_n].counter
            op = "<=" if n < m else "<"
            constraints.append(Rel(op, Counter(counter + "__a"), Counter(counter + "__b")))
        a = map_expr(index_n, _side("__a", False))
        b = map_expr(index_m, _side("__b", True))
        constraints.append(Rel("==", a, b))
        if self.session is None:
            return True
        return self.session.satisfiable(constraints, lower=0)

    # D2(b)

    def kills(self, head: int, array: str) -> Optional[List[int]]:
        """Nodes that together overwrite every cell of `array` in [0, N), or None."""
        loop = self.cfg.loops[head]
        ell = Counter(loop.counter)
        guards = self.cfg.nodes[head].guards
        top = [n for n in sorted(loop.body)
               if self.cfg.nodes[n].guards == guards and isinstance(self.cfg.nodes[n].stmt, Store)]
        if not any(self.cfg.nodes[n].stmt.array == array and self.cfg.nodes[n].stmt.index == ell
                   for n in top):
            return None
        if same_value(loop.bound, Param()):
            return [head]
        if same_value(loop.bound, n_minus(1)):
            for n, node in self.cfg.nodes.items():
                stmt = node.stmt
                if (n in self.peel and node.loop is None and not node.guards
                        and isinstance(stmt, Store) and stmt.array == array
                        and same_value(stmt.index, n_minus(1))):
                    return [head, n]
        return None

    def killed_between(self, n: int, m: int, array: str) -> bool:
        for head, loop in self.cfg.loops.items():
            inside = loop.body | {head, loop.incr}
            if n in inside or m in inside:
                continue
            blockers = self.kills(head, array)
            if blockers and all(avoids(self.cfg, n, m, b) for b in blockers):
                return True
        return False

    # edges

    def scalar_dep(self, n: int, m: int, v: str) -> bool:
        others = {k for k in self.atoms if v in self.du[k].defs}
        allowed = set(self.cfg.nodes) - others
        return reachable_via(self.cfg, n, m, allowed)

    def edge(self, n: int, m: int) -> bool:
        dn, dm = self.du[n], self.du[m]
        for v in dn.defs & dm.uses:
            if v not in dn.def_index:
                if self.scalar_dep(n, m, v):
                    return True
                continue
            for index in dm.use_indices.get(v, ()):
                if self.overlap(n, m, dn.def_index[v], index) and not self.killed_between(n, m, v):
                    return True
        if n in self.peel and m not in self.peel:
            for v in dn.defs & dm.defs:
                if v not in dn.def_index or self.overlap(n, m, dn.def_index[v], dm.def_index[v]):
                    return True
        return False

    def build(self) -> Ddg:
        edges: Set[Edge] = set()
        for n in self.atoms:
            if not self.du[n].defs:
                continue
            for m in self.atoms:
                if m == n or not reaches(self.cfg, n, m):
                    continue
                if self.edge(n, m):
                    edges.add((n, m))
        logger.debug("DDG with %d edge(s): %s", len(edges), sorted(edges))
        return Ddg(self.cfg, frozenset(edges), self.peel)


def compute_ddg(peeled: PeeledProgram, session=None) -> Ddg:
    """Read-after-write edges plus peeled-then-non-peeled write-after-write edges."""
    return _Analysis(peeled, session).build()


def compute_affected(peeled: PeeledProgram, ddg: Ddg) -> FrozenSet[str]:
    """Names whose value may differ between P_{N-1} and the peel-stripped P_N."""
    cfg = peeled.cfg
    peel = peeled.peel_nodes
    atoms = [n for n in cfg.atoms() if n not in peel]
    seeds = [n for n in atoms
             if "N" in cfg.def_uses(n).uses or any((p, n) in ddg.edges for p in peel)]
    queue = deque(seeds)
    queued = set(seeds)
    affected: Set[str] = set()
    while queue:
        n = queue.popleft()
        node = cfg.nodes[n]
        if node.kind == NodeKind.ASSIGN:
            affected |= cfg.def_uses(n).defs
            nexts = [m for m in ddg.successors(n) if m not in peel]
        else:
            nexts = [m for m in atoms if reaches(cfg, n, m)]
        for m in nexts:
            if m not in queued:
                queued.add(m)
                queue.append(m)
    logger.debug("affected names: %s", sorted(affected))
    return frozenset(affected)


__all__ = ["Ddg", "compute_ddg", "compute_affected"]
