"""
Verification conditions, solver sessions and counterexamples.
"""

from fpi.smt.encoder import (
    VcQuery, encode_bounded_triple, encode_inductive_triple, encode_satisfiability,
    encode_validity,
)
from fpi.smt.solver import Answer, SolverSession, SolverVerdict, default_session
from fpi.smt.counterexample import Witness, extract_counterexample

__all__ = [
    "VcQuery", "encode_bounded_triple", "encode_inductive_triple", "encode_satisfiability",
    "encode_validity", "Answer", "SolverSession", "SolverVerdict", "default_session",
    "Witness", "extract_counterexample",
]
