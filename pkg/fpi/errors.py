"""
Errors
------
Exception hierarchy shared by the verifier stages.
"""

from typing import Optional


class FpiError(Exception):
    """Base class for every verifier error."""


# Language ------------------------------------------------------------------

class LanguageError(FpiError):
    """Raised for malformed program text."""


class ProgramSyntaxError(LanguageError):
    """Lexical or syntactic error with a source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.message = message
        self.line = line
        self.col = col


class GrammarViolation(LanguageError):
    """Program is well-formed text but outside the accepted fragment."""

    def __init__(self, construct: str):
        super().__init__(f"unsupported construct: {construct}")
        self.construct = construct


# Transformations -----------------------------------------------------------

class NonConstantPeelCount(FpiError):
    """Loop bound does not grow by a non-negative constant between N-1 and N."""

    def __init__(self, loop: str, expr: str, negative: bool = False):
        if negative:
            message = f"loop '{loop}' shrinks as N grows (bound difference {expr})"
        else:
            message = f"loop '{loop}' has non-constant peel count {expr}"
        super().__init__(message)
        self.loop = loop
        self.expr = expr
        self.negative = negative


class DiffError(FpiError):
    """Difference program cannot be built."""


class BranchDiffUnsupported(DiffError):
    def __init__(self, condition: str):
        super().__init__(f"branch condition may differ between N-1 and N: {condition}")
        self.condition = condition


class UnsupportedOperator(DiffError):
    def __init__(self, operator: str, where: str = ""):
        detail = f" in {where}" if where else ""
        super().__init__(f"cannot rectify operator '{operator}'{detail}")
        self.operator = operator


class StaleCellError(DiffError):
    """A write of P_{N-1} at an N-dependent cell is visible in P_N's result."""

    def __init__(self, cell: str):
        super().__init__(f"stale cell {cell} left by the N-1 run is observable")
        self.cell = cell


# Preconditions -------------------------------------------------------------

class PreconditionError(FpiError):
    pass


class DiffPreFailed(PreconditionError):
    def __init__(self, formula: str):
        super().__init__(f"precondition is not inductive in N: {formula}")
        self.formula = formula


class LiftFailed(PreconditionError):
    pass


# Solving -------------------------------------------------------------------

class SmtError(FpiError):
    pass


class SolverUnavailable(SmtError):
    pass


class UnrollBoundUndefined(SmtError):
    def __init__(self, bound: str, n: int):
        super().__init__(f"loop bound {bound} is not a non-negative integer at N={n}")
        self.bound = bound
        self.n = n


class ResidualLoop(SmtError):
    """A loop left in the difference program has no quantified summary."""

    def __init__(self, loop: str):
        super().__init__(f"no summary for loop: {loop}")
        self.loop = loop


class WitnessReplayMismatch(SmtError):
    pass


class NotSatisfiable(SmtError):
    """Counterexample requested from a verdict that is not sat."""


# Execution -----------------------------------------------------------------

class RuntimeTrap(FpiError):
    pass


class DivisionByZero(RuntimeTrap):
    def __init__(self, location: str):
        super().__init__(f"division by zero at {location}")
        self.location = location


class UninitializedRead(RuntimeTrap):
    def __init__(self, name: str, index: Optional[int] = None):
        cell = name if index is None else f"{name}[{index}]"
        super().__init__(f"read of uninitialized {cell}")
        self.name = name
        self.index = index


class DecompositionExhausted(FpiError):
    pass


class InputSamplingFailed(FpiError):
    """No initial state satisfying the precondition was found."""

    def __init__(self, n: int, attempts: int):
        super().__init__(f"no input satisfying the precondition found for N={n} after {attempts} attempts")
        self.n = n
        self.attempts = attempts
