"""
Control-flow graphs of structured programs.

Node ids follow program order: an assignment gets one node, an `if` one
branch node followed by its branches, a loop a head node, its body and an
increment node that carries the back edge to the head. Node 0 is start and
the largest id is end.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from fpi.lang.ast import (
    Assign, BoolExpr, Expr, For, If, Read, Seq, Stmt, Store, Var, Param,
    bool_exprs, sub_exprs,
)
from fpi.lang.printer import format_bool, format_expr, format_stmt

logger = logging.getLogger(__name__)

TT, FF, U = "tt", "ff", "U"


class NodeKind(str, Enum):
    START = "start"
    END = "end"
    ASSIGN = "assign"
    BRANCH = "branch"
    HEAD = "head"
    INCR = "incr"
    LOOP = "loop"


@dataclass(frozen=True)
class CfgNode:
    id: int
    kind: NodeKind
    stmt: Optional[Stmt] = None
    loop: Optional[int] = None
    guards: Tuple[Tuple[BoolExpr, bool], ...] = ()
    tag: Optional[str] = None

    @property
    def cond(self) -> Optional[BoolExpr]:
        return self.stmt.cond if isinstance(self.stmt, If) else None

    def label(self) -> str:
        if self.kind in (NodeKind.START, NodeKind.END):
            return self.kind.value
        if self.kind == NodeKind.BRANCH:
            return format_bool(self.stmt.cond)
        if self.kind in (NodeKind.HEAD, NodeKind.LOOP):
            return f"{self.stmt.counter} < {format_expr(self.stmt.bound)}"
        if self.kind == NodeKind.INCR:
            return f"{self.stmt.counter} = {self.stmt.counter} + 1"
        return format_stmt(self.stmt)


@dataclass(frozen=True)
class LoopInfo:
    head: int
    counter: str
    bound: Expr
    body: FrozenSet[int]
    incr: int
    incoming: Tuple[int, ...]
    exit: Optional[int]
    stmt: For

    @property
    def back_edge(self) -> Tuple[int, int]:
        return (self.incr, self.head)


@dataclass(frozen=True)
class DefUse:
    defs: FrozenSet[str]
    uses: FrozenSet[str]
    def_index: Dict[str, Expr] = field(default_factory=dict, hash=False)
    use_indices: Dict[str, Tuple[Expr, ...]] = field(default_factory=dict, hash=False)


def def_uses(stmt: Optional[Stmt]) -> DefUse:
    """Definitions and uses of one node's statement (counters excluded)."""
    if isinstance(stmt, Assign):
        return _collect({stmt.target}, {}, [stmt.value])
    if isinstance(stmt, Store):
        return _collect({stmt.array}, {stmt.array: stmt.index}, [stmt.index, stmt.value])
    if isinstance(stmt, If):
        return _collect(set(), {}, list(bool_exprs(stmt.cond)))
    return DefUse(frozenset(), frozenset())


def _collect(defs: Set[str], def_index: Dict[str, Expr], exprs: List[Expr]) -> DefUse:
    uses: Set[str] = set()
    use_indices: Dict[str, List[Expr]] = {}
    for expr in exprs:
        for e in sub_exprs(expr):
            if isinstance(e, Var):
                uses.add(e.name)
            elif isinstance(e, Param):
                uses.add("N")
            elif isinstance(e, Read):
                uses.add(e.array)
                use_indices.setdefault(e.array, []).append(e.index)
    return DefUse(frozenset(defs), frozenset(uses), dict(def_index),
                  {k: tuple(v) for k, v in use_indices.items()})


@dataclass
class Cfg:
    program: Seq
    nodes: Dict[int, CfgNode]
    edges: Tuple[Tuple[int, int, str], ...]
    loops: Dict[int, LoopInfo]
    start: int
    end: int
    collapsed: FrozenSet[int] = frozenset()
    origin: Optional["Cfg"] = None
    _graph: Optional[nx.DiGraph] = field(default=None, repr=False, compare=False)

    @property
    def graph(self) -> nx.DiGraph:
        if self._graph is None:
            g = nx.DiGraph()
            g.add_nodes_from(self.nodes)
            for src, dst, label in self.edges:
                if g.has_edge(src, dst):
                    g[src][dst]["labels"].add(label)
                else:
                    g.add_edge(src, dst, labels={label})
            self._graph = g
        return self._graph

    def successors(self, n: int) -> List[int]:
        return sorted(self.graph.successors(n))

    def predecessors(self, n: int) -> List[int]:
        return sorted(self.graph.predecessors(n))

    def def_uses(self, n: int) -> DefUse:
        node = self.nodes[n]
        if node.kind in (NodeKind.ASSIGN, NodeKind.BRANCH):
            return def_uses(node.stmt)
        return DefUse(frozenset(), frozenset())

    def atoms(self) -> List[int]:
        """Assignment and branch nodes in id order."""
        return [n for n, node in sorted(self.nodes.items())
                if node.kind in (NodeKind.ASSIGN, NodeKind.BRANCH)]

    def back_edges(self) -> Set[Tuple[int, int]]:
        return {loop.back_edge for head, loop in self.loops.items() if head not in self.collapsed}

    def nodes_tagged(self, tag: str) -> FrozenSet[int]:
        return frozenset(n for n, node in self.nodes.items() if node.tag == tag)


class _Builder:
    """Emits nodes in program order and wires dangling exits to the next node."""

    def __init__(self):
        self.nodes: Dict[int, CfgNode] = {}
        self.edges: List[Tuple[int, int, str]] = []
        self.loops: Dict[int, LoopInfo] = {}
        self.next_id = 0

    def new(self, kind: NodeKind, stmt=None, loop=None, guards=(), pending=()) -> int:
        nid = self.next_id
        self.next_id += 1
        tag = getattr(stmt, "tag", None) if stmt is not None else None
        self.nodes[nid] = CfgNode(nid, kind, stmt, loop, tuple(guards), tag)
        for src, label in pending:
            self.edges.append((src, nid, label))
        return nid

    def block(self, seq: Seq, pending, loop, guards):
        for stmt in seq.stmts:
            pending = self.statement(stmt, pending, loop, guards)
        return pending

    def statement(self, stmt: Stmt, pending, loop, guards):
        if isinstance(stmt, (Assign, Store)):
            nid = self.new(NodeKind.ASSIGN, stmt, loop, guards, pending)
            return [(nid, U)]
        if isinstance(stmt, Seq):
            return self.block(stmt, pending, loop, guards)
        if isinstance(stmt, If):
            b = self.new(NodeKind.BRANCH, stmt, loop, guards, pending)
            then_exits = self.block(stmt.then, [(b, TT)], loop, guards + ((stmt.cond, True),))
            else_exits = self.block(stmt.orelse, [(b, FF)], loop, guards + ((stmt.cond, False),))
            return then_exits + else_exits
        if isinstance(stmt, For):
            incoming = tuple(src for src, _ in pending)
            head = self.new(NodeKind.HEAD, stmt, None, guards, pending)
            first_body = self.next_id
            body_exits = self.block(stmt.body, [(head, TT)], head, guards)
            incr = self.new(NodeKind.INCR, stmt, head, guards, body_exits)
            self.edges.append((incr, head, U))
            body = frozenset(range(first_body, incr))
            self.loops[head] = LoopInfo(head, stmt.counter, stmt.bound, body, incr,
                                        incoming, None, stmt)
            return [(head, FF)]
        raise TypeError(f"not a statement: {stmt!r}")


def build_cfg(program: Seq) -> Cfg:
    """CFG of a program; ids follow program order."""
    b = _Builder()
    start = b.new(NodeKind.START)
    pending = b.block(program, [(start, U)], None, ())
    end = b.new(NodeKind.END, pending=pending)
    exits = {src: dst for src, dst, label in b.edges if label == FF and src in b.loops}
    loops = {h: replace(info, exit=exits.get(h)) for h, info in b.loops.items()}
    cfg = Cfg(program, b.nodes, tuple(b.edges), loops, start, end)
    logger.debug("built CFG with %d nodes and %d loops", len(cfg.nodes), len(loops))
    return cfg


def collapse_loops(cfg: Cfg) -> Cfg:
    """Replace each loop by a single LOOP node keeping its incoming and exit edges."""
    full = cfg.origin or cfg
    hidden = set()
    for loop in cfg.loops.values():
        hidden |= loop.body | {loop.incr}
    nodes = {}
    for n, node in cfg.nodes.items():
        if n in hidden:
            continue
        nodes[n] = replace(node, kind=NodeKind.LOOP) if n in cfg.loops else node
    edges = tuple((s, d, label) for s, d, label in cfg.edges
                  if s not in hidden and d not in hidden and not (s in cfg.loops and label == TT))
    return Cfg(cfg.program, nodes, edges, dict(cfg.loops), cfg.start, cfg.end,
               frozenset(cfg.loops), full)


def uncollapse_loop(cfg: Cfg, head: int) -> Cfg:
    """Restore the body of one collapsed loop."""
    if head not in cfg.collapsed:
        return cfg
    full = cfg.origin
    loop = cfg.loops[head]
    restored = loop.body | {loop.incr}
    nodes = dict(cfg.nodes)
    nodes[head] = full.nodes[head]
    for n in restored:
        nodes[n] = full.nodes[n]
    extra = tuple((s, d, label) for s, d, label in full.edges
                  if s in restored or d in restored)
    edges = cfg.edges + extra
    collapsed = cfg.collapsed - {head}
    return Cfg(cfg.program, nodes, edges, dict(cfg.loops), cfg.start, cfg.end,
               collapsed, full if collapsed else None)


def post_dominators(cfg: Cfg) -> Dict[int, int]:
    """Immediate post-dominator of every node except end."""
    ipdom = nx.immediate_dominators(cfg.graph.reverse(copy=True), cfg.end)
    return {n: d for n, d in ipdom.items() if n != cfg.end}


def reachable_via(cfg: Cfg, n: int, target: int, allowed: Iterable[int]) -> bool:
    """A path of length >= 1 from n to target whose intermediate nodes are all in `allowed`."""
    allowed = set(allowed)
    seen = set()
    frontier = list(cfg.graph.successors(n))
    while frontier:
        m = frontier.pop()
        if m == target:
            return True
        if m in seen or m not in allowed:
            continue
        seen.add(m)
        frontier.extend(cfg.graph.successors(m))
    return False


def reaches(cfg: Cfg, n: int, target: int) -> bool:
    return reachable_via(cfg, n, target, cfg.nodes)


def avoids(cfg: Cfg, n: int, target: int, blocker: int) -> bool:
    """True when every n -> target path passes through `blocker`."""
    allowed = set(cfg.nodes) - {blocker}
    return not reachable_via(cfg, n, target, allowed)


def to_dot(cfg: Cfg, ddg_edges: Iterable[Tuple[int, int]] = ()) -> str:
    """Graphviz text of the CFG, with data-dependence edges dashed."""
    lines = ["digraph cfg {", "  node [shape=box, fontname=monospace];"]
    for n, node in sorted(cfg.nodes.items()):
        label = f"{n}: {node.label()}".replace('"', '\\"').replace("\n", "\\l")
        style = ', style=filled, fillcolor="#eeeeee"' if node.tag == "peel" else ""
        lines.append(f'  n{n} [label="{label}"{style}];')
    for src, dst, label in cfg.edges:
        lines.append(f'  n{src} -> n{dst} [label="{label}"];')
    for src, dst in sorted(ddg_edges):
        lines.append(f"  n{src} -> n{dst} [style=dashed, color=blue];")
    lines.append("}")
    return "\n".join(lines)


__all__ = [
    "Cfg", "CfgNode", "LoopInfo", "NodeKind", "DefUse", "build_cfg", "collapse_loops",
    "uncollapse_loop", "def_uses", "post_dominators", "reachable_via", "reaches",
    "avoids", "to_dot", "TT", "FF", "U",
]
