"""
Polynomial normal form over integer atoms.

An atom is N, a scalar, a loop counter, an array read (index normalized) or an
opaque term (a division, remainder or power that does not fold). Two
expressions with the same normal form denote the same integer function.
"""

from __future__ import annotations

from typing import Dict, Iterable, Optional, Tuple

from fpi.lang.ast import (
    And, BinOp, BoolConst, BoolExpr, Const, Counter, Expr, Neg, Not, Or, Param,
    Read, Rel, Var, FALSE, TRUE,
)
from fpi.lang.printer import format_expr

Monomial = Tuple[Tuple[Expr, int], ...]


def euclid_div(a: int, b: int) -> int:
    """SMT-LIB integer division: a = b*q + r with 0 <= r < |b|."""
    return (a - euclid_mod(a, b)) // b


def euclid_mod(a: int, b: int) -> int:
    return a % abs(b)


def _atom_key(atom: Expr) -> str:
    return format_expr(atom)


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    powers: Dict[Expr, int] = dict(m1)
    for atom, k in m2:
        powers[atom] = powers.get(atom, 0) + k
    return tuple(sorted(powers.items(), key=lambda item: _atom_key(item[0])))


def _mono_degree(m: Monomial) -> int:
    return sum(k for _, k in m)


class Poly:
    """Integer polynomial: mapping monomial -> non-zero coefficient."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[Monomial, int]] = None):
        self.terms = {m: c for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def const(cls, value: int) -> "Poly":
        return cls({(): value})

    @classmethod
    def atom(cls, atom: Expr) -> "Poly":
        return cls({((atom, 1),): 1})

    def __add__(self, other: "Poly") -> "Poly":
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return Poly(terms)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        terms: Dict[Monomial, int] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                terms[m] = terms.get(m, 0) + c1 * c2
        return Poly(terms)

    def scale(self, k: int) -> "Poly":
        return Poly({m: c * k for m, c in self.terms.items()})

    def power(self, k: int) -> "Poly":
        result = Poly.const(1)
        for _ in range(k):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        return f"Poly({format_expr(self.to_expr())})"

    # queries

    def is_const(self) -> bool:
        return all(m == () for m in self.terms)

    def const_value(self) -> int:
        return self.terms.get((), 0)

    def atoms(self) -> set:
        return {atom for m in self.terms for atom, _ in m}

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self.terms), default=0)

    def degree_in(self, names: Iterable[str]) -> int:
        names = set(names)
        best = 0
        for m in self.terms:
            best = max(best, sum(k for atom, k in m if atom_name(atom) in names))
        return best

    def divisible_by(self, k: int) -> bool:
        return k != 0 and all(c % k == 0 for c in self.terms.values())

    def exact_div(self, k: int) -> "Poly":
        return Poly({m: c // k for m, c in self.terms.items()})

    def linear_split(self, atom: Expr) -> Optional[Tuple[int, "Poly"]]:
        """(c, rest) with self == c*atom + rest and atom absent from rest."""
        coef = 0
        rest: Dict[Monomial, int] = {}
        for m, c in self.terms.items():
            powers = dict(m)
            k = powers.get(atom, 0)
            if k == 0:
                rest[m] = c
            elif k == 1 and len(m) == 1:
                coef += c
            else:
                return None
        if coef == 0:
            return None
        return coef, Poly(rest)

    def split_params(self) -> Tuple["Poly", "Poly"]:
        """(part with non-parameter atoms, part over N and constants)."""
        var_part: Dict[Monomial, int] = {}
        param_part: Dict[Monomial, int] = {}
        for m, c in self.terms.items():
            if all(isinstance(atom, Param) for atom, _ in m):
                param_part[m] = c
            else:
                var_part[m] = c
        return Poly(var_part), Poly(param_part)

    def leading_coefficient(self) -> int:
        if not self.terms:
            return 0
        return self.terms[self._ordered()[0]]

    def _ordered(self):
        return sorted(self.terms, key=lambda m: (-_mono_degree(m),
                                                [(_atom_key(a), -k) for a, k in m]))

    # conversion

    def to_expr(self) -> Expr:
        ordered = [m for m in self._ordered() if m != ()]
        if () in self.terms:
            ordered.append(())
        if not ordered:
            return Const(0)
        result: Optional[Expr] = None
        for m in ordered:
            c = self.terms[m]
            magnitude = _mono_expr(m, abs(c))
            if result is None:
                if c > 0:
                    result = magnitude
                elif m == ():
                    result = Const(c)
                elif abs(c) == 1:
                    result = Neg(magnitude)
                else:
                    result = _mono_expr(m, c)
            else:
                result = BinOp("+" if c > 0 else "-", result, magnitude)
        return result


def _mono_expr(m: Monomial, coef: int) -> Expr:
    factors = []
    for atom, k in m:
        factors.extend([atom] * k)
    if not factors:
        return Const(coef)
    result: Optional[Expr] = None if coef == 1 else Const(coef)
    for f in factors:
        result = f if result is None else BinOp("*", result, f)
    return result


def atom_name(atom: Expr) -> Optional[str]:
    if isinstance(atom, Var):
        return atom.name
    if isinstance(atom, Read):
        return atom.array
    return None


def to_poly(expr: Expr) -> Poly:
    """Normal form of an expression."""
    if isinstance(expr, Const):
        return Poly.const(expr.value)
    if isinstance(expr, (Param, Var, Counter)):
        return Poly.atom(expr)
    if isinstance(expr, Read):
        return Poly.atom(Read(expr.array, simplify_expr(expr.index)))
    if isinstance(expr, Neg):
        return -to_poly(expr.operand)
    if isinstance(expr, BinOp):
        left, right = to_poly(expr.left), to_poly(expr.right)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if expr.op == "/":
            return _fold_div(left, right)
        if expr.op == "%":
            return _fold_mod(left, right)
        if expr.op == "**":
            if right.is_const() and right.const_value() >= 0:
                return left.power(right.const_value())
            return Poly.atom(BinOp("**", left.to_expr(), right.to_expr()))
    raise TypeError(f"not an expression: {expr!r}")


def _fold_div(num: Poly, den: Poly) -> Poly:
    if den.is_const() and den.const_value() != 0:
        d = den.const_value()
        if num.is_const():
            return Poly.const(euclid_div(num.const_value(), d))
        if num.divisible_by(d):
            return num.exact_div(d)
    return Poly.atom(BinOp("/", num.to_expr(), den.to_expr()))


def _fold_mod(num: Poly, den: Poly) -> Poly:
    if den.is_const() and den.const_value() != 0:
        d = den.const_value()
        if num.is_const():
            return Poly.const(euclid_mod(num.const_value(), d))
        if num.divisible_by(d):
            return Poly.const(0)
    return Poly.atom(BinOp("%", num.to_expr(), den.to_expr()))


def simplify_expr(expr: Expr) -> Expr:
    """Canonical polynomial form; constant-folds and preserves value."""
    return to_poly(expr).to_expr()


def same_value(a: Expr, b: Expr) -> bool:
    """Syntactic equality modulo normalization."""
    return to_poly(a) == to_poly(b)


_FLIP = {"==": "==", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}
_NEGATE = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def compare(op: str, a: int, b: int) -> bool:
    return {"==": a == b, "!=": a != b, "<": a < b, "<=": a <= b,
            ">": a > b, ">=": a >= b}[op]


def normalize_rel(op: str, left: Expr, right: Expr) -> BoolExpr:
    """`lhs op rhs` with atoms on the left and N/constants on the right."""
    diff = to_poly(left) - to_poly(right)
    if diff.is_const():
        return BoolConst(compare(op, diff.const_value(), 0))
    lhs, rhs = diff.split_params()
    if not lhs.terms:
        lhs, rhs = rhs - Poly.const(rhs.const_value()), Poly.const(rhs.const_value())
    rhs = -rhs
    if lhs.leading_coefficient() < 0:
        lhs, rhs, op = -lhs, -rhs, _FLIP[op]
    return Rel(op, lhs.to_expr(), rhs.to_expr())


def simplify_bool(pred: BoolExpr) -> BoolExpr:
    """Normalize relations, fold constants and flatten connectives."""
    if isinstance(pred, Rel):
        return normalize_rel(pred.op, pred.left, pred.right)
    if isinstance(pred, Not):
        inner = simplify_bool(pred.operand)
        if isinstance(inner, BoolConst):
            return BoolConst(not inner.value)
        if isinstance(inner, Rel):
            return simplify_bool(Rel(_NEGATE[inner.op], inner.left, inner.right))
        return Not(inner)
    if isinstance(pred, (And, Or)):
        unit = isinstance(pred, And)
        items = []
        for item in pred.items:
            s = simplify_bool(item)
            if isinstance(s, BoolConst):
                if s.value != unit:
                    return BoolConst(not unit)
                continue
            if type(s) is type(pred):
                items.extend(s.items)
            elif s not in items:
                items.append(s)
        if not items:
            return BoolConst(unit)
        if len(items) == 1:
            return items[0]
        return type(pred)(tuple(items))
    return pred


def decide(pred: BoolExpr) -> Optional[bool]:
    s = simplify_bool(pred)
    if s == TRUE:
        return True
    if s == FALSE:
        return False
    return None
