"""
Solver backends and the per-run solver session.

The in-process backend drives `z3.Solver` with push/pop; the process backend
keeps one external SMT-LIB v2 executable open per session, wraps each query
in `(push 1)`/`(pop 1)` and reads `check-sat` and `get-value` answers back
over the pipe. Both consume the same VcQuery.
"""

from __future__ import annotations

import logging
import re
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import z3

from fpi.config import Config
from fpi.errors import SolverUnavailable
from fpi.lang.ast import BoolExpr, Formula
from fpi.smt.encoder import VcQuery, encode_satisfiability, encode_validity

logger = logging.getLogger(__name__)

ModelValue = Union[int, Dict[int, int]]


class Answer(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"

    @classmethod
    def from_text(cls, text: str) -> "Answer":
        text = text.strip()
        for answer in cls:
            if text == answer.value:
                return answer
        return cls.UNKNOWN


@dataclass
class SolverVerdict:
    status: Answer
    model: Optional[Dict[str, ModelValue]] = None
    reason: Optional[str] = None
    script: Optional[str] = None

    @property
    def is_unsat(self) -> bool:
        return self.status == Answer.UNSAT

    @property
    def is_sat(self) -> bool:
        return self.status == Answer.SAT


class Z3Backend:
    """In-process z3."""

    name = "z3"

    def __init__(self, timeout_ms: int):
        self.solver = z3.Solver()
        self.solver.set("timeout", timeout_ms)

    def solve(self, query: VcQuery, assertions: List[z3.BoolRef], want_model: bool) -> SolverVerdict:
        self.solver.push()
        try:
            self.solver.add(*assertions)
            result = self.solver.check()
            if result == z3.unsat:
                return SolverVerdict(Answer.UNSAT)
            if result == z3.unknown:
                return SolverVerdict(Answer.UNKNOWN, reason=self.solver.reason_unknown())
            model = _read_model(query, self.solver.model()) if want_model else None
            return SolverVerdict(Answer.SAT, model)
        finally:
            self.solver.pop()

    def close(self):
        pass


def _read_model(query: VcQuery, model: z3.ModelRef) -> Dict[str, ModelValue]:
    env = query.initial_env
    values: Dict[str, ModelValue] = {}
    if env is None or query.n_value is None:
        return values
    for name in query.model_scalars:
        values[name] = model.eval(env.initial(name), model_completion=True).as_long()
    for name in query.model_arrays:
        array = env.initial(name)
        values[name] = {k: model.eval(z3.Select(array, k), model_completion=True).as_long()
                        for k in range(query.n_value)}
    return values


class ProcessBackend:
    """External SMT-LIB v2 solver kept open for the session; one push/pop scope per query."""

    DONE = "fpi-done"

    def __init__(self, path: str, timeout_ms: int):
        resolved = shutil.which(path) or (path if Path(path).exists() else None)
        if resolved is None:
            raise SolverUnavailable(f"solver executable not found: {path}")
        self.path = resolved
        self.name = Path(resolved).name
        self.timeout_ms = timeout_ms
        self.process: Optional[subprocess.Popen] = None

    def arguments(self) -> List[str]:
        if "z3" in self.name:
            return [self.path, "-smt2", "-in", f"-t:{self.timeout_ms}"]
        if "cvc" in self.name:
            return [self.path, "--lang=smt2", "--incremental", f"--tlimit-per={self.timeout_ms}"]
        return [self.path]

    def start(self) -> subprocess.Popen:
        if self.process is None or self.process.poll() is not None:
            try:
                self.process = subprocess.Popen(self.arguments(), stdin=subprocess.PIPE,
                                                stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
                                                universal_newlines=True, bufsize=1)
            except OSError as e:
                raise SolverUnavailable(f"cannot start {self.path}: {e}") from e
            logger.debug("started %s (pid %d)", self.name, self.process.pid)
            self.write("(set-option :produce-models true)")
        return self.process

    def write(self, text: str):
        self.process.stdin.write(text + "\n")
        self.process.stdin.flush()

    def exchange(self, commands: str) -> Optional[List[str]]:
        """Reply lines up to the echo marker; None when the solver went away."""
        process = self.start()
        try:
            self.write(f'{commands}\n(echo "{self.DONE}")')
        except OSError as e:
            logger.warning("%s stopped accepting input: %s", self.name, e)
            self.close()
            return None
        lines: List[str] = []
        for line in iter(process.stdout.readline, ""):
            line = line.strip()
            if line.strip('"') == self.DONE:
                return lines
            if line:
                lines.append(line)
        logger.warning("%s exited with code %s", self.name, process.poll())
        self.close()
        return None

    def solve(self, query: VcQuery, assertions: List[z3.BoolRef], want_model: bool) -> SolverVerdict:
        solver = z3.Solver()
        solver.add(*assertions)
        body = solver.to_smt2().replace("(check-sat)", "")
        keys, terms = _value_terms(query) if want_model else ([], [])
        commands = ["(push 1)", _declare_missing(body, terms), body, "(check-sat)"]
        if terms:
            commands.append(f"(get-value ({' '.join(t.sexpr() for t in terms)}))")
        commands.append("(pop 1)")
        lines = self.exchange("\n".join(c for c in commands if c))
        if lines is None:
            return SolverVerdict(Answer.UNKNOWN, reason=f"{self.name} exited")
        errors = [line for line in lines if line.startswith("(error")]
        replies = [line for line in lines
                   if not line.startswith("(error") and line not in _CHATTER]
        reason = errors[0] if errors else None
        if reason:
            logger.warning("%s on %s: %s", self.name, query.label, reason)
        if not replies:
            return SolverVerdict(Answer.UNKNOWN, reason=reason or "no answer")
        answer = Answer.from_text(replies[0])
        if answer != Answer.SAT or not terms:
            return SolverVerdict(answer, reason=reason)
        try:
            model = _model_from_pairs(keys, parse_sexpr(" ".join(replies[1:])))
        except (ValueError, IndexError, TypeError) as e:
            return SolverVerdict(answer, reason=f"unreadable model: {e}")
        return SolverVerdict(answer, model)

    def close(self):
        if self.process is None:
            return
        process, self.process = self.process, None
        if process.poll() is not None:
            return
        try:
            process.stdin.write("(exit)\n")
            process.communicate(timeout=5)
        except (OSError, ValueError, subprocess.TimeoutExpired):
            process.kill()
            process.communicate()


ValueKey = Tuple[str, Optional[int]]

# acknowledgements some solvers print for set-option and set-info
_CHATTER = ("success", "unsupported")


def _value_terms(query: VcQuery) -> Tuple[List[ValueKey], List[z3.ExprRef]]:
    """`get-value` terms for the model, keyed by (name, cell) in request order."""
    env = query.initial_env
    if env is None or query.n_value is None:
        return [], []
    keys: List[ValueKey] = []
    terms: List[z3.ExprRef] = []
    for name in query.model_scalars:
        keys.append((name, None))
        terms.append(env.initial(name))
    for name in query.model_arrays:
        array = env.initial(name)
        for k in range(query.n_value):
            keys.append((name, k))
            terms.append(z3.Select(array, k))
    return keys, terms


_DECLARED = re.compile(r"\(declare-(?:fun|const) (\S+)")


def _declare_missing(script: str, terms: Sequence[z3.ExprRef]) -> str:
    """Declarations for model constants the assertions never mention."""
    declared = set(_DECLARED.findall(script))
    lines = []
    for term in terms:
        const = term.arg(0) if z3.is_select(term) else term
        symbol = const.sexpr()
        if symbol not in declared:
            declared.add(symbol)
            lines.append(f"(declare-fun {symbol} () {const.sort().sexpr()})")
    return "\n".join(lines)


def parse_sexpr(text: str):
    """Parse one s-expression into nested lists of strings."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    stack: List[list] = [[]]
    for token in tokens:
        if token == "(":
            stack.append([])
        elif token == ")":
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(token)
    return stack[0][0] if stack[0] else []


def _to_int(value) -> int:
    if isinstance(value, list):
        # (- 3)
        return -_to_int(value[1])
    return int(value)


def _model_from_pairs(keys: Sequence[ValueKey], pairs) -> Dict[str, ModelValue]:
    """Values from a `get-value` reply, matched to the request by position."""
    if not isinstance(pairs, list) or len(pairs) != len(keys):
        raise ValueError(f"expected {len(keys)} values in the get-value reply")
    values: Dict[str, ModelValue] = {}
    for (name, cell), pair in zip(keys, pairs):
        value = _to_int(pair[1])
        if cell is None:
            values[name] = value
        else:
            values.setdefault(name, {})[cell] = value
    return values


@dataclass
class SessionStats:
    queries: int = 0
    seconds: float = 0.0
    answers: Dict[str, int] = field(default_factory=dict)


class SolverSession:
    """One solver per verification run; dumps every query when given a directory."""

    def __init__(self, solver_path: Optional[str] = None, timeout_ms: Optional[int] = None,
                 dump_dir: Optional[str] = None):
        self.timeout_ms = timeout_ms or Config.SOLVER_TIMEOUT_MS
        if solver_path:
            self.backend = ProcessBackend(solver_path, self.timeout_ms)
        else:
            self.backend = Z3Backend(self.timeout_ms)
        self.dump_dir = Path(dump_dir) if dump_dir else None
        if self.dump_dir:
            self.dump_dir.mkdir(parents=True, exist_ok=True)
        self.script_paths: List[str] = []
        self.stats = SessionStats()

    def __enter__(self) -> "SolverSession":
        return self

    def __exit__(self, exc_type, exc, tb):
        self.backend.close()

    def check(self, query: VcQuery, want_model: bool = False) -> SolverVerdict:
        """Decide a refutation query: instances first, then with quantified facts kept."""
        started = time.perf_counter()
        verdict = self.backend.solve(query, query.assertions(quantified=False), want_model)
        if not verdict.is_unsat and query.facts:
            verdict = self.backend.solve(query, query.assertions(quantified=True), want_model)
        elapsed = time.perf_counter() - started
        self.stats.queries += 1
        self.stats.seconds += elapsed
        self.stats.answers[verdict.status.value] = self.stats.answers.get(verdict.status.value, 0) + 1
        if self.dump_dir or logger.isEnabledFor(logging.DEBUG):
            script = query.to_smt2()
            verdict.script = script
            logger.debug("query %s -> %s (%.3fs)\n%s", query.label, verdict.status.value, elapsed, script)
            if self.dump_dir:
                path = self.dump_dir / f"vc_{len(self.script_paths) + 1:04d}_{_slug(query.label)}.smt2"
                path.write_text(script + f"; answer: {verdict.status.value}\n", encoding="utf-8")
                self.script_paths.append(str(path))
        return verdict

    def valid(self, hypotheses: Sequence[Formula], goal: Formula, lower: Optional[int] = None,
              constraints: Sequence[BoolExpr] = ()) -> bool:
        """True only when the implication is proved; unknown counts as not valid."""
        query = encode_validity(hypotheses, goal, lower, constraints)
        return self.check(query).is_unsat

    def satisfiable(self, constraints: Sequence[BoolExpr], lower: Optional[int] = None,
                    hypotheses: Sequence[Formula] = ()) -> bool:
        """False only when unsatisfiability is proved; unknown counts as satisfiable."""
        query = encode_satisfiability(constraints, lower, hypotheses)
        return not self.check(query).is_unsat


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in label)[:48].strip("_") or "query"


def default_session(name: str = "run") -> SolverSession:
    """Session from Config; its scripts go to a fresh run directory when KEEP_RUNS is set."""
    dump_dir = Config.run_directory(name) if Config.KEEP_RUNS else None
    return SolverSession(Config.SOLVER_PATH, Config.SOLVER_TIMEOUT_MS, dump_dir)
