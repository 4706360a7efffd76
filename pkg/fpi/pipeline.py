"""
Verification Pipeline
---------------------
File-level driver: parse a triple, run full-program induction and confirm
the verdict against the concrete interpreter.
"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

from fpi.cfg import to_dot
from fpi.config import Config
from fpi.driver import FpiEngine, Verdict, VerdictKind, analyze
from fpi.errors import FpiError, InputSamplingFailed, RuntimeTrap
from fpi.interpreter import InputSampler, ProgState, evaluate_formula, failing_conjunct, interpret
from fpi.lang.ast import HoareTriple
from fpi.lang.parser import parse_program
from fpi.lang.printer import format_formula
from fpi.smt.solver import SolverSession
from fpi.utils import load_json

logger = logging.getLogger(__name__)

ORACLE_MAX_N = 8


class VerificationPipeline:
    """Runs the verifier on program files and reports verdict dictionaries."""

    def __init__(self, settings: Optional[Dict[str, Any]] = None, dump_vcs: Optional[str] = None,
                 dump_cfg: Optional[str] = None, oracle_samples: int = 5, verbose: bool = True):
        self.settings = {**Config.verifier_settings(), **(settings or {})}
        self.dump_vcs = dump_vcs
        self.dump_cfg = dump_cfg
        self.oracle_samples = oracle_samples
        self.verbose = verbose

    def say(self, message: str):
        if self.verbose:
            print(message)

    def session(self, name: str = "program") -> SolverSession:
        """Solver session; scripts go to --dump-vcs, else to a fresh run directory."""
        dump_dir = self.dump_vcs
        if dump_dir is None and self.settings.get("keep_runs"):
            dump_dir = str(Config.run_directory(name))
        return SolverSession(self.settings["solver_path"], self.settings["timeout_ms"], dump_dir)

    def engine(self, session: SolverSession) -> FpiEngine:
        return FpiEngine(
            session,
            base_bound=self.settings["base_bound"],
            max_rounds=self.settings["max_rounds"],
            max_depth=self.settings["max_depth"],
            max_decompositions=self.settings["max_decompositions"],
        )

    def verify_file(self, file_path: str) -> Dict[str, Any]:
        """Verify one `.fpi` file; errors are reported, never raised."""
        file_path = Path(file_path)
        if not file_path.exists():
            raise FileNotFoundError(f"File not found: {file_path}")
        return self.verify_text(file_path.read_text(encoding="utf-8"), file_path.stem)

    def verify_text(self, text: str, name: str = "program") -> Dict[str, Any]:
        started = time.perf_counter()
        self.say(f"Verifying: {name}")
        try:
            self.say("  [1/4] Parsing program...")
            triple = parse_program(text)

            with self.session(name) as session:
                if self.dump_cfg:
                    self.say("  [2/4] Writing control-flow graph...")
                    self.write_cfg(triple, name, session)
                else:
                    self.say("  [2/4] Control-flow graph dump skipped")

                self.say("  [3/4] Running full-program induction...")
                verdict = self.engine(session).verify(triple)

            self.say("  [4/4] Checking verdict against the interpreter...")
            oracle = self.oracle_check(triple, verdict)
        except FpiError as e:
            logger.error("%s: %s", name, e)
            self.say(f"  Error: {e}")
            return {
                "program": name,
                "verdict": "Error",
                "error": f"{type(e).__name__}: {e}",
                "seconds": round(time.perf_counter() - started, 4),
            }

        result = {"program": name, **verdict.to_dict(), "oracle": oracle,
                  "seconds": round(time.perf_counter() - started, 4)}
        self.say(f"  Verdict: {verdict.label()}")
        return result

    def write_cfg(self, triple: HoareTriple, name: str, session: SolverSession) -> str:
        analysis = analyze(triple, session)
        out_dir = Path(self.dump_cfg)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{name}.dot"
        path.write_text(to_dot(analysis.ddg.cfg, analysis.ddg.edges), encoding="utf-8")
        logger.info("control-flow graph written to %s", path)
        return str(path)

    def oracle_check(self, triple: HoareTriple, verdict: Verdict,
                     max_n: int = ORACLE_MAX_N) -> Dict[str, Any]:
        """Run the program on sampled inputs; a Valid verdict must see no violation."""
        if verdict.kind is not VerdictKind.VALID:
            return {"checked": 0, "violations": []}
        sampler = InputSampler(seed=0)
        checked, violations = 0, []
        for n in range(1, max_n + 1):
            for _ in range(self.oracle_samples):
                try:
                    initial = sampler.sample(triple, n)
                    final = interpret(triple.prog, initial)
                    holds = evaluate_formula(triple.post, final)
                except InputSamplingFailed:
                    break
                except RuntimeTrap as e:
                    violations.append({"N": n, "trap": str(e)})
                    continue
                checked += 1
                if not holds:
                    failing = failing_conjunct(triple.post, final)
                    violations.append({"N": n, "initial": initial.to_dict(),
                                       "failing": format_formula(failing) if failing else ""})
        if violations:
            logger.error("verified program violates its post-condition on %d run(s)", len(violations))
        return {"checked": checked, "violations": violations}

    def interpret_file(self, file_path: str, n: int, input_path: Optional[str] = None,
                       seed: Optional[int] = None) -> Dict[str, Any]:
        """Execute a program at size `n`, from a JSON state or a sampled one."""
        triple = parse_program(Path(file_path).read_text(encoding="utf-8"))
        if input_path:
            data = load_json(input_path)
            initial = ProgState.from_dict({**data, "N": n})
        else:
            initial = InputSampler(seed=seed).sample(triple, n)
        final = interpret(triple.prog, initial)
        return {
            "N": n,
            "initial": initial.to_dict(),
            "final": final.to_dict(),
            "pre": evaluate_formula(triple.pre, initial),
            "post": evaluate_formula(triple.post, final),
        }


def verify_files(paths: List[str], **options) -> List[Dict[str, Any]]:
    pipeline = VerificationPipeline(**options)
    return [pipeline.verify_file(p) for p in paths]


__all__ = ["VerificationPipeline", "verify_files", "ORACLE_MAX_N"]
