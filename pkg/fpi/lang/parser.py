"""
Recursive-descent parser for annotated array programs.

    assume(<formula>);
    <statements>
    assert(<formula>);

Loops have the fixed shape `for (i = 0; i < bound; i = i + 1)` with a bound
over N and constants; loops do not nest and array indices contain no reads.
Quantifiers are written `forall i in [lo, hi) :: pred` (likewise `exists`)
and extend as far right as possible, so conjunctions of quantified formulas
parenthesize them.
"""

from __future__ import annotations

import re
from typing import List, Optional, Tuple, Union

from fpi.errors import GrammarViolation, ProgramSyntaxError
from fpi.lang.ast import (
    And, Assign, BinOp, BoolConst, BoolExpr, Conj, Const, Counter, Disj, Exists, Expr,
    For, Forall, Formula, HoareTriple, If, Neg, Not, Or, Param, QF, Read, Rel, Seq,
    Stmt, Store, Var, PARAM, REL_OPS, sub_exprs,
)

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|==|!=|<=|>=|&&|\|\||::|[-+*/%<>=!()\[\]{};,])
""", re.VERBOSE | re.DOTALL)

KEYWORDS = {"assume", "assert", "if", "else", "for", "forall", "exists", "in", "true", "false"}

Token = Tuple[str, str, int, int]
Node = Union[Expr, BoolExpr, Formula]


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ProgramSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind == "comment":
            newlines = value.count("\n")
            if newlines:
                line += newlines
                line_start = pos + value.rfind("\n") + 1
        elif kind != "ws":
            if kind == "id" and value in KEYWORDS:
                kind = "kw"
            tokens.append((kind, value, line, col))
        pos = m.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    """Parser over a token list; one instance per source text."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.counter: Optional[str] = None
        self.bound: Tuple[str, ...] = ()

    # token helpers

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, value: str) -> bool:
        kind, text, _, _ = self.peek()
        return text == value and kind in ("op", "kw")

    def advance(self) -> Token:
        token = self.peek()
        self.pos += 1
        return token

    def error(self, message: str) -> ProgramSyntaxError:
        _, text, line, col = self.peek()
        found = text or "end of input"
        return ProgramSyntaxError(f"{message}, found {found!r}", line, col)

    def expect(self, value: str) -> Token:
        if not self.at(value):
            raise self.error(f"expected {value!r}")
        return self.advance()

    def expect_id(self) -> str:
        kind, text, _, _ = self.peek()
        if kind != "id":
            raise self.error("expected identifier")
        self.advance()
        return text

    def expect_num(self) -> int:
        kind, text, _, _ = self.peek()
        if kind != "num":
            raise self.error("expected integer literal")
        self.advance()
        return int(text)

    # program

    def parse_program(self) -> HoareTriple:
        self.expect("assume")
        self.expect("(")
        pre = self.parse_formula()
        self.expect(")")
        self.expect(";")
        stmts = []
        while not self.at("assert"):
            if self.peek()[0] == "eof":
                raise self.error("expected 'assert'")
            stmts.append(self.statement())
        self.expect("assert")
        self.expect("(")
        post = self.parse_formula()
        self.expect(")")
        self.expect(";")
        if self.peek()[0] != "eof":
            raise self.error("unexpected text after assert")
        return HoareTriple(pre, Seq(tuple(stmts)), post)

    def statement(self) -> Stmt:
        if self.at("if"):
            return self.if_statement()
        if self.at("for"):
            return self.for_statement()
        name = self.expect_id()
        if name == PARAM:
            raise GrammarViolation("assignment to N")
        if name == self.counter:
            raise GrammarViolation(f"assignment to loop counter {name}")
        if self.at("["):
            self.advance()
            index = self.index_expr()
            self.expect("]")
            self.expect("=")
            value = self.expression()
            self.expect(";")
            return Store(name, index, value)
        self.expect("=")
        value = self.expression()
        self.expect(";")
        return Assign(name, value)

    def block(self) -> Seq:
        if self.at("{"):
            self.advance()
            stmts = []
            while not self.at("}"):
                if self.peek()[0] == "eof":
                    raise self.error("expected '}'")
                stmts.append(self.statement())
            self.advance()
            return Seq(tuple(stmts))
        return Seq((self.statement(),))

    def if_statement(self) -> If:
        self.expect("if")
        self.expect("(")
        cond = self.predicate()
        self.expect(")")
        then = self.block()
        orelse = Seq()
        if self.at("else"):
            self.advance()
            orelse = Seq((self.if_statement(),)) if self.at("if") else self.block()
        return If(cond, then, orelse)

    def for_statement(self) -> For:
        self.expect("for")
        if self.counter is not None:
            raise GrammarViolation("nested loop")
        self.expect("(")
        counter = self.expect_id()
        self.expect("=")
        if self.expect_num() != 0:
            raise GrammarViolation("loop counter must start at 0")
        self.expect(";")
        if self.expect_id() != counter:
            raise GrammarViolation("loop guard must test the loop counter")
        self.expect("<")
        bound = self.expression()
        if any(isinstance(e, (Var, Read, Counter)) for e in sub_exprs(bound)):
            raise GrammarViolation("loop bound must depend only on N and constants")
        self.expect(";")
        if self.expect_id() != counter:
            raise GrammarViolation("loop step must update the loop counter")
        self.expect("=")
        if self.expect_id() != counter:
            raise GrammarViolation("loop step must be counter + 1")
        self.expect("+")
        if self.expect_num() != 1:
            raise GrammarViolation("loop step must be counter + 1")
        self.expect(")")
        self.counter = counter
        try:
            body = self.block()
        finally:
            self.counter = None
        return For(counter, bound, body)

    # expressions and formulas

    def expression(self) -> Expr:
        node = self.additive()
        if not isinstance(node, Expr):
            raise self.error("expected arithmetic expression")
        return node

    def index_expr(self) -> Expr:
        index = self.expression()
        if any(isinstance(e, Read) for e in sub_exprs(index)):
            raise GrammarViolation("array read inside an index expression")
        return index

    def predicate(self) -> BoolExpr:
        node = self.disjunction()
        if isinstance(node, Expr) or isinstance(node, Formula):
            raise self.error("expected quantifier-free condition")
        return node

    def parse_formula(self) -> Formula:
        return to_formula(self.disjunction())

    def disjunction(self) -> Node:
        items = [self.conjunction()]
        while self.at("||"):
            self.advance()
            items.append(self.conjunction())
        return _connect(items, conjunctive=False)

    def conjunction(self) -> Node:
        items = [self.negation()]
        while self.at("&&"):
            self.advance()
            items.append(self.negation())
        return _connect(items, conjunctive=True)

    def negation(self) -> Node:
        if self.at("!"):
            self.advance()
            operand = self.negation()
            if not isinstance(operand, BoolExpr):
                raise GrammarViolation("negation of a quantified formula or expression")
            return Not(operand)
        return self.relation()

    def relation(self) -> Node:
        if self.at("forall") or self.at("exists"):
            return self.quantifier()
        left = self.additive()
        kind, text, _, _ = self.peek()
        if kind == "op" and text in REL_OPS:
            if not isinstance(left, Expr):
                raise self.error("relational operand must be an expression")
            self.advance()
            return Rel(text, left, self.expression())
        return left

    def quantifier(self) -> Formula:
        word = self.advance()[1]
        var = self.expect_id()
        self.expect("in")
        self.expect("[")
        lo = self.expression()
        self.expect(",")
        hi = self.expression()
        self.expect(")")
        self.expect("::")
        saved = self.bound
        self.bound = saved + (var,)
        try:
            body = self.disjunction()
        finally:
            self.bound = saved
        if not isinstance(body, BoolExpr):
            raise GrammarViolation("quantifier body must be quantifier-free")
        cls = Forall if word == "forall" else Exists
        return cls(var, lo, hi, body)

    def additive(self) -> Node:
        left = self.multiplicative()
        while self.at("+") or self.at("-"):
            op = self.advance()[1]
            left = BinOp(op, self._arith(left), self._arith(self.multiplicative()))
        return left

    def multiplicative(self) -> Node:
        left = self.unary()
        while self.at("*") or self.at("/") or self.at("%"):
            op = self.advance()[1]
            left = BinOp(op, self._arith(left), self._arith(self.unary()))
        return left

    def unary(self) -> Node:
        # binds looser than **, so -2 ** 2 == -(2 ** 2)
        if self.at("-"):
            self.advance()
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Neg(self._arith(operand))
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.at("**"):
            self.advance()
            return BinOp("**", self._arith(base), self._arith(self.unary()))
        return base

    def primary(self) -> Node:
        kind, text, _, _ = self.peek()
        if kind == "num":
            self.advance()
            return Const(int(text))
        if text in ("true", "false") and kind == "kw":
            self.advance()
            return BoolConst(text == "true")
        if kind == "op" and text == "(":
            self.advance()
            node = self.disjunction()
            self.expect(")")
            return node
        if kind == "id":
            self.advance()
            if text == PARAM:
                return Param()
            if self.at("["):
                self.advance()
                index = self.index_expr()
                self.expect("]")
                return Read(text, index)
            if text in self.bound:
                return Var(text)
            if text == self.counter:
                return Counter(text)
            return Var(text)
        raise self.error("expected expression")

    def _arith(self, node: Node) -> Expr:
        if not isinstance(node, Expr):
            raise self.error("arithmetic on a non-integer operand")
        return node


def _connect(items: List[Node], conjunctive: bool) -> Node:
    if len(items) == 1:
        return items[0]
    for item in items:
        if isinstance(item, Expr):
            raise GrammarViolation("integer expression used as a condition")
    if all(isinstance(item, BoolExpr) for item in items):
        return And(tuple(items)) if conjunctive else Or(tuple(items))
    formulas = tuple(to_formula(item) for item in items)
    return Conj(formulas) if conjunctive else Disj(formulas)


def to_formula(node: Node) -> Formula:
    if isinstance(node, Formula):
        return node
    if isinstance(node, BoolExpr):
        return QF(node)
    raise GrammarViolation("integer expression used as a formula")


def parse_program(text: str) -> HoareTriple:
    """Parse a full annotated program."""
    return Parser(text).parse_program()


def parse_formula(text: str) -> Formula:
    parser = Parser(text)
    formula = parser.parse_formula()
    if parser.peek()[0] != "eof":
        raise parser.error("unexpected text after formula")
    return formula


def parse_expr(text: str, counters: Tuple[str, ...] = ()) -> Expr:
    parser = Parser(text)
    if counters:
        parser.counter = counters[0]
    expr = parser.expression()
    if parser.peek()[0] != "eof":
        raise parser.error("unexpected text after expression")
    return expr


def parse_stmts(text: str) -> Seq:
    """Parse a bare statement list (used for difference programs and tests)."""
    parser = Parser(text)
    stmts = []
    while parser.peek()[0] != "eof":
        stmts.append(parser.statement())
    return Seq(tuple(stmts))
