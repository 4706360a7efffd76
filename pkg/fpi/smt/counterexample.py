"""
Counterexamples from sat base-case queries, confirmed by concrete replay.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

from fpi.errors import NotSatisfiable, RuntimeTrap, WitnessReplayMismatch
from fpi.interpreter import ProgState, evaluate_formula, failing_conjunct, interpret
from fpi.lang.ast import HoareTriple
from fpi.lang.printer import format_formula
from fpi.smt.solver import SolverVerdict

logger = logging.getLogger(__name__)


@dataclass
class Witness:
    n: int
    initial: ProgState
    final: Optional[ProgState]
    failing: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.n,
            "initial": self.initial.to_dict(),
            "final": self.final.to_dict() if self.final else None,
            "failing": self.failing,
        }


def state_from_model(model: Dict[str, Any], n: int) -> ProgState:
    state = ProgState(n)
    for name, value in model.items():
        if isinstance(value, dict):
            state.arrays[name] = dict(value)
        else:
            state.scalars[name] = value
    return state


def extract_counterexample(verdict: SolverVerdict, triple: HoareTriple, n: int) -> Witness:
    """Witness for a violated triple at N = n, replayed through the interpreter."""
    if not verdict.is_sat or verdict.model is None:
        raise NotSatisfiable(f"no model to extract (solver answered {verdict.status.value})")
    initial = state_from_model(verdict.model, n)
    try:
        if not evaluate_formula(triple.pre, initial):
            raise WitnessReplayMismatch(f"model violates the precondition at N={n}")
    except RuntimeTrap as e:
        raise WitnessReplayMismatch(f"precondition not evaluable on model: {e}") from e
    try:
        final = interpret(triple.prog, initial)
    except RuntimeTrap as e:
        # a trap in the base case is itself a violation
        logger.info("counterexample at N=%d traps: %s", n, e)
        return Witness(n, initial, None, str(e))
    try:
        failed = failing_conjunct(triple.post, final)
    except RuntimeTrap as e:
        return Witness(n, initial, final, str(e))
    if failed is None:
        raise WitnessReplayMismatch(
            f"postcondition holds when replaying the model at N={n}: {initial.to_dict()}")
    return Witness(n, initial, final, format_formula(failed))
