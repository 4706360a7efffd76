"""
Full-program induction engine.

`fpi_verify` checks {phi} P_N {psi} for every N >= 1: a bounded base case,
then the inductive step {psi(N-1) /\ dphi} dP_N {psi(N)}, strengthened round
by round with weakest pre-conditions and, when the difference program still
has loops, recursing on the difference program itself.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Any, Dict, FrozenSet, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from fpi.config import Config
from fpi.depend import Ddg, compute_affected, compute_ddg
from fpi.diff import DiffProgram, program_diff, simplify_diff
from fpi.errors import (
    BranchDiffUnsupported, DecompositionExhausted, DiffError, DiffPreFailed, LiftFailed,
    NonConstantPeelCount, ResidualLoop,
)
from fpi.lang.ast import (
    Assign, BinOp, Const, Expr, Forall, Formula, HoareTriple, Param, QF, Read, Rel, Seq, Stmt,
    Store, Var, array_names, conj, conjuncts, expr_size, formula_names, formula_uses_param,
    iter_stmts, loops, n_minus, read_names, retag, stmt_exprs, sub_exprs, written_names,
)
from fpi.lang.poly import same_value, simplify_bool, to_poly
from fpi.lang.printer import format_formula, format_stmt
from fpi.lang.subst import map_node, substitute_param
from fpi.peel import PeeledProgram, peel_all_loops
from fpi.precond import (
    WpResult, frame_conjuncts, lift_to_quantified, loop_free_wp, syntactic_diff, to_next, to_prev,
)
from fpi.rename import GLUE, RenameResult, rename
from fpi.smt.counterexample import Witness, extract_counterexample
from fpi.smt.encoder import encode_bounded_triple, encode_inductive_triple
from fpi.smt.solver import SolverSession, SolverVerdict, default_session
from fpi.utils import StageTimer

logger = logging.getLogger(__name__)


class VerdictKind(str, Enum):
    VALID = "Valid"
    COUNTEREXAMPLE = "CounterexampleFound"
    INCONCLUSIVE = "Inconclusive"


class InconclusiveReason(str, Enum):
    BRANCH_DIFF = "BranchDiff"
    PEEL_COUNT = "PeelCount"
    DIFF_PRE = "DiffPre"
    NO_PROGRESS = "NoProgress"
    BASE_STRENGTH_FAIL = "BaseStrengthFail"
    SOLVER_UNKNOWN = "SolverUnknown"
    DEPTH_LIMIT = "DepthLimit"
    UNSUPPORTED = "Unsupported"


@dataclass
class Verdict:
    kind: VerdictKind
    reason: Optional[InconclusiveReason] = None
    detail: str = ""
    witness: Optional[Witness] = None
    rounds: int = 0
    depth: int = 0
    timings: Dict[str, float] = field(default_factory=dict)
    scripts: List[str] = field(default_factory=list)
    trace: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return self.kind is VerdictKind.VALID

    def label(self) -> str:
        if self.reason is not None:
            return f"{self.kind.value}({self.reason.value})"
        return self.kind.value

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"verdict": self.kind.value}
        if self.reason is not None:
            data["reason"] = self.reason.value
        if self.detail:
            data["detail"] = self.detail
        if self.witness is not None:
            data["witness"] = self.witness.to_dict()
        data.update({
            "rounds": self.rounds,
            "depth": self.depth,
            "timings": self.timings,
            "vc_scripts": self.scripts,
        })
        return data


def _inconclusive(reason: InconclusiveReason, detail: str = "", depth: int = 0) -> Verdict:
    return Verdict(VerdictKind.INCONCLUSIVE, reason, detail, depth=depth)


# Analysis and the progress gate ---------------------------------------------

class Analysis(NamedTuple):
    renamed: RenameResult
    peeled: PeeledProgram
    ddg: Ddg
    affected: FrozenSet[str]
    written: FrozenSet[str]

    @property
    def triple(self) -> HoareTriple:
        return self.renamed.triple


def analyze(triple: HoareTriple, session=None) -> Analysis:
    """Rename, peel and compute the N-affected names of a triple."""
    renamed = rename(triple, session)
    peeled = peel_all_loops(renamed.triple.prog)
    ddg = compute_ddg(peeled, session)
    affected = compute_affected(peeled, ddg)
    written = frozenset(written_names(renamed.triple.prog))
    return Analysis(renamed, peeled, ddg, affected, written)


class ProgressMeasure(NamedTuple):
    """Lexicographic rank: loops, affected names, degree in them, expression size."""
    loops: int
    affected: int
    degree: int
    size: int


def progress_measure(analysis: Analysis) -> ProgressMeasure:
    prog = analysis.triple.prog
    count = sum(1 for loop in loops(prog) if loop.tag != GLUE)
    degree, size = 0, 0
    for s in iter_stmts(prog):
        if isinstance(s, (Assign, Store)) and s.tag != GLUE:
            degree = max(degree, to_poly(s.value).degree_in(analysis.affected))
            size += expr_size(s.value)
    return ProgressMeasure(count, len(analysis.affected), degree, size)


def check_progress(parent: Analysis, child: Analysis) -> bool:
    """True when the child program ranks strictly below its parent."""
    return progress_measure(child) < progress_measure(parent)


# Decompositions --------------------------------------------------------------

def valid_decompositions(pre_items: Sequence[Formula], phi: Formula, written: FrozenSet[str],
                         suffix: str, session, lower: int,
                         cap: int) -> Iterator[Tuple[List[Formula], List[Formula]]]:
    """(dphi', Pre') splits of a pre-condition, smallest dphi' first.

    dphi' may only name what P_{N-1} leaves untouched and must follow from phi(N).
    """
    snapshots = {x + suffix for x in written}
    items = list(pre_items)
    tried = 0
    for size in range(1, len(items) + 1):
        for chosen in combinations(range(len(items)), size):
            if tried >= cap:
                return
            tried += 1
            part = [items[k] for k in chosen]
            rest = [items[k] for k in range(len(items)) if k not in chosen]
            names = set()
            for f in part:
                names |= formula_names(f)
            if names & (written | snapshots):
                continue
            if not session.valid([phi], conj(part), lower=lower):
                continue
            yield part, rest


# Slicing and input-definition propagation ---------------------------------------

def _has_division(stmt: Stmt) -> bool:
    return any(isinstance(e, BinOp) and e.op in ("/", "%")
               for s in iter_stmts(stmt) for x in stmt_exprs(s) for e in sub_exprs(x))


def slice_program(prog: Seq, needed: set) -> Seq:
    """Top-level statements that can influence `needed`, plus any that divide."""
    keep: List[Stmt] = []
    needed = set(needed)
    for s in reversed(prog.stmts):
        if written_names(s) & needed or _has_division(s):
            keep.append(s)
            needed |= read_names(s)
    return Seq(tuple(reversed(keep)))


def _definitions(items: Sequence[Formula]) -> Tuple[List[Tuple[Expr, Expr]], List[Formula]]:
    """Split off `cell == f(N)` facts; they are substituted instead of assumed."""
    table: List[Tuple[Expr, Expr]] = []
    rest: List[Formula] = []
    for item in items:
        if isinstance(item, QF) and formula_uses_param(item):
            pred = simplify_bool(item.pred)
            if (isinstance(pred, Rel) and pred.op == "==" and isinstance(pred.left, (Var, Read))
                    and not any(isinstance(e, (Var, Read)) for e in sub_exprs(pred.right))):
                table.append((pred.left, pred.right))
                continue
        rest.append(item)
    return table, rest


def _substitute_definitions(node, table: List[Tuple[Expr, Expr]]):
    if not table:
        return node

    def fn(e: Expr) -> Expr:
        for atom, value in table:
            if isinstance(e, Var) and e == atom:
                return value
            if (isinstance(e, Read) and isinstance(atom, Read) and e.array == atom.array
                    and same_value(e.index, atom.index)):
                return value
        return e
    return map_node(node, fn)


# Engine ----------------------------------------------------------------------

@dataclass
class _Task:
    """One level of the induction: a renamed triple and its difference program."""
    analysis: Analysis
    d: DiffProgram
    dphi: Formula
    frame: List[Formula]
    depth: int
    start: int
    lower: int

    @property
    def triple(self) -> HoareTriple:
        return self.analysis.triple

    @property
    def psi(self) -> Formula:
        return self.triple.post

    def prev(self, node):
        return to_prev(node, self.d.written, self.d.suffix)


class FpiEngine:
    def __init__(self, session: SolverSession, base_bound: Optional[int] = None,
                 max_rounds: Optional[int] = None, max_depth: Optional[int] = None,
                 max_decompositions: Optional[int] = None):
        self.session = session
        self.base_bound = base_bound or Config.BASE_BOUND
        self.max_rounds = max_rounds or Config.MAX_ROUNDS
        self.max_depth = Config.MAX_DEPTH if max_depth is None else max_depth
        self.max_decompositions = max_decompositions or Config.MAX_DECOMPOSITIONS
        self.timer = StageTimer()
        self.trace: List[Dict[str, Any]] = []
        self.rounds = 0
        self.depth = 0
        self.unknown = False

    def note(self, depth: int, stage: str, text: str):
        self.trace.append({"depth": depth, "stage": stage, "text": text})
        logger.debug("[depth %d] %s:\n%s", depth, stage, text)

    # entry point

    def verify(self, triple: HoareTriple) -> Verdict:
        verdict = self._verify(triple, depth=0, start=1)
        verdict.rounds = self.rounds
        verdict.depth = self.depth
        verdict.timings = self.timer.as_dict()
        verdict.scripts = list(self.session.script_paths)
        verdict.trace = self.trace
        logger.info("verdict: %s after %d round(s), depth %d", verdict.label(), self.rounds, self.depth)
        return verdict

    # bounded checks

    def first_failure(self, triple: HoareTriple, ns: Sequence[int],
                      want_model: bool = False) -> Optional[Tuple[int, SolverVerdict]]:
        for n in ns:
            query = encode_bounded_triple(triple, n, label=f"base N={n}")
            verdict = self.session.check(query, want_model=want_model)
            if not verdict.is_unsat:
                return n, verdict
        return None

    def holds_at_base(self, task: _Task, post: Formula, extra: int = 0) -> bool:
        triple = HoareTriple(task.triple.pre, task.triple.prog, post, task.triple.param)
        ns = range(task.start, task.start + self.base_bound + extra)
        return self.first_failure(triple, ns) is None

    # one level

    def _verify(self, triple: HoareTriple, depth: int, start: int,
                analysis: Optional[Analysis] = None) -> Verdict:
        self.depth = max(self.depth, depth)
        lower = start + self.base_bound - 1
        with self.timer.stage("base"):
            failure = self.first_failure(triple, range(start, lower + 1), want_model=depth == 0)
        if failure is not None:
            n, verdict = failure
            if verdict.is_sat and depth == 0:
                witness = extract_counterexample(verdict, triple, n)
                logger.info("counterexample at N=%d: %s", n, witness.failing)
                return Verdict(VerdictKind.COUNTEREXAMPLE, witness=witness, depth=depth)
            if verdict.is_sat:
                return _inconclusive(InconclusiveReason.BASE_STRENGTH_FAIL,
                                     f"difference triple fails at N={n}", depth)
            return _inconclusive(InconclusiveReason.SOLVER_UNKNOWN, f"base case at N={n}", depth)

        try:
            with self.timer.stage("analysis"):
                analysis = analysis or analyze(triple, self.session)
            self.note(depth, "renamed", format_stmt(analysis.triple.prog))
            renamed = analysis.triple
            with self.timer.stage("precondition"):
                dphi = syntactic_diff(renamed.pre, analysis.written, self.session, lower)
                frame = frame_conjuncts(renamed.pre, analysis.written)
                shifted = substitute_param(renamed.pre, n_minus(1))
                if not self.session.valid([renamed.pre], conj([shifted, dphi]), lower=lower):
                    raise DiffPreFailed(format_formula(renamed.pre))
            self.note(depth, "difference pre-condition", format_formula(dphi))
            with self.timer.stage("diff"):
                d = program_diff(analysis.peeled, analysis.affected, analysis.written, renamed.post,
                                 self.session, lower, depth)
                d = simplify_diff(d, facts=[dphi, *frame], session=self.session, lower=lower)
            self.note(depth, "difference program", d.text())
        except NonConstantPeelCount as e:
            return _inconclusive(InconclusiveReason.PEEL_COUNT, str(e), depth)
        except DiffPreFailed as e:
            return _inconclusive(InconclusiveReason.DIFF_PRE, str(e), depth)
        except BranchDiffUnsupported as e:
            return _inconclusive(InconclusiveReason.BRANCH_DIFF, str(e), depth)
        except DiffError as e:
            return _inconclusive(InconclusiveReason.UNSUPPORTED, str(e), depth)

        task = _Task(analysis, d, dphi, frame, depth, start, lower)
        return self.strengthen(task, [], task.psi, [], 1)

    def hypotheses(self, task: _Task, cpre: Sequence[Formula], extra: Sequence[Formula]) -> List[Formula]:
        return ([task.prev(c) for c in cpre] + [task.prev(task.psi), task.dphi]
                + list(extra) + list(task.frame))

    def proves(self, task: _Task, hyps: Sequence[Formula], goal: Formula, label: str) -> bool:
        d = task.d
        try:
            query = encode_inductive_triple(hyps, d.prog, goal, d.written, d.prev_name, task.lower,
                                            label=label, havoc=True)
        except ResidualLoop:
            return False
        verdict = self.session.check(query)
        if not verdict.is_unsat and not verdict.is_sat:
            self.unknown = True
        return verdict.is_unsat

    def strengthen(self, task: _Task, cpre: List[Formula], latest: Formula,
                   extra: List[Formula], first_round: int) -> Verdict:
        """The strengthening loop; `extra` holds difference pre-conditions from decompositions."""
        for round_no in range(first_round, self.max_rounds + 1):
            hyps = self.hypotheses(task, cpre, extra)
            goal = conj([task.psi, *cpre])
            with self.timer.stage("induction"):
                if self.proves(task, hyps, goal, f"inductive d{task.depth} r{round_no}"):
                    return Verdict(VerdictKind.VALID, depth=task.depth)
            with self.timer.stage("wp"):
                wp = loop_free_wp(latest, task.d, hyps, post_facts=[goal],
                                  session=self.session, lower=task.lower)
            if wp is None:
                break
            with self.timer.stage("base"):
                new = self.lift(task, wp)
                strengthened = self.holds_at_base(task, conj(new))
            self.note(task.depth, f"strengthening round {round_no}", format_formula(conj(new)))
            if not strengthened:
                return self.fpi_decompose_verify(task, cpre, wp, extra, round_no)
            self.rounds += 1
            cpre = cpre + new
            latest = conj(new)
        return self.recurse(task, cpre, extra)

    def lift(self, task: _Task, wp: WpResult) -> List[Formula]:
        out = []
        for item in conjuncts(wp.at_n):
            try:
                item = lift_to_quantified(item, lambda c: self.holds_at_base(task, c, extra=1))
            except LiftFailed:
                pass
            out.append(item)
        return out

    def fpi_decompose_verify(self, task: _Task, cpre: List[Formula], wp: WpResult,
                             extra: List[Formula], round_no: int) -> Verdict:
        """Move parts of Pre(N-1) that phi already guarantees into the difference pre-condition."""
        items = list(conjuncts(wp.at_nm1))
        try:
            for part, rest in self._decompositions(task, items):
                remaining = [to_next(f, task.d.written, task.d.suffix) for f in rest]
                if not self.holds_at_base(task, conj(remaining)):
                    continue
                self.note(task.depth, "decomposition", format_formula(conj(part)))
                verdict = self.strengthen(task, cpre + remaining, conj(remaining),
                                          extra + part, round_no + 1)
                if verdict.kind is not VerdictKind.INCONCLUSIVE:
                    return verdict
            raise DecompositionExhausted(format_formula(wp.at_nm1))
        except DecompositionExhausted as e:
            return _inconclusive(InconclusiveReason.BASE_STRENGTH_FAIL,
                                 f"strengthening fails the base case: {e}", task.depth)

    def _decompositions(self, task: _Task, items: List[Formula]):
        return valid_decompositions(items, task.triple.pre, task.d.written, task.d.suffix,
                                    self.session, task.lower, self.max_decompositions)

    # recursion

    def recurse(self, task: _Task, cpre: List[Formula], extra: List[Formula]) -> Verdict:
        if task.depth + 1 > self.max_depth:
            return _inconclusive(InconclusiveReason.DEPTH_LIMIT, f"depth {task.depth}", task.depth)
        hyps = self.hypotheses(task, cpre, extra)
        pending = [c for c in conjuncts(conj([task.psi, *cpre]))
                   if not self.proves(task, hyps, c, f"conjunct d{task.depth}")]
        if not pending:
            return Verdict(VerdictKind.VALID, depth=task.depth)

        d = task.d
        needed = set()
        for c in pending:
            needed |= formula_names(c)
        prog = retag(slice_program(d.prog, needed), None)
        arrays = array_names(prog)
        initial = []
        for x in sorted(written_names(prog)):
            if x in arrays:
                cell = Rel("==", Read(x, Var("i")), Read(d.prev_name(x), Var("i")))
                initial.append(Forall("i", Const(0), Param(), cell))
            else:
                initial.append(QF(Rel("==", Var(x), Var(d.prev_name(x)))))
        table, pre_items = _definitions([f for h in hyps for f in conjuncts(h)] + initial)
        child = HoareTriple(conj(_substitute_definitions(f, table) for f in pre_items),
                            _substitute_definitions(prog, table),
                            conj(_substitute_definitions(c, table) for c in pending),
                            task.triple.param)
        self.note(task.depth + 1, "recursive triple",
                  f"pre: {format_formula(child.pre)}\n{format_stmt(child.prog)}\npost: {format_formula(child.post)}")
        try:
            with self.timer.stage("analysis"):
                child_analysis = analyze(child, self.session)
        except NonConstantPeelCount as e:
            return _inconclusive(InconclusiveReason.PEEL_COUNT, str(e), task.depth + 1)
        parent_rank, child_rank = progress_measure(task.analysis), progress_measure(child_analysis)
        logger.info("recursion to depth %d: %s -> %s", task.depth + 1, tuple(parent_rank), tuple(child_rank))
        if not child_rank < parent_rank:
            reason = InconclusiveReason.SOLVER_UNKNOWN if self.unknown else InconclusiveReason.NO_PROGRESS
            return _inconclusive(reason, f"{tuple(parent_rank)} -> {tuple(child_rank)}", task.depth)
        verdict = self._verify(child, task.depth + 1, task.lower + 1, child_analysis)
        if verdict.kind is VerdictKind.COUNTEREXAMPLE:
            return _inconclusive(InconclusiveReason.BASE_STRENGTH_FAIL,
                                 "difference triple has a concrete violation", verdict.depth)
        return verdict


def fpi_verify(triple: HoareTriple, session: Optional[SolverSession] = None, **settings) -> Verdict:
    """Verify a triple for all N >= 1."""
    if session is not None:
        return FpiEngine(session, **settings).verify(triple)
    with default_session() as owned:
        return FpiEngine(owned, **settings).verify(triple)


__all__ = [
    "Analysis", "FpiEngine", "InconclusiveReason", "ProgressMeasure", "Verdict", "VerdictKind",
    "analyze", "check_progress", "fpi_verify", "progress_measure", "slice_program",
    "valid_decompositions",
]
