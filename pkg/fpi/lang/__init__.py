"""
Program language: syntax tree, parser, printer, substitution and
polynomial simplification.
"""

from fpi.lang.ast import HoareTriple, PARAM
from fpi.lang.parser import parse_program, parse_formula, parse_expr, parse_stmts
from fpi.lang.printer import format_expr, format_bool, format_formula, format_stmt, format_triple
from fpi.lang.poly import simplify_expr, simplify_bool, same_value
from fpi.lang.subst import substitute_param, rename_names

__all__ = [
    "HoareTriple", "PARAM",
    "parse_program", "parse_formula", "parse_expr", "parse_stmts",
    "format_expr", "format_bool", "format_formula", "format_stmt", "format_triple",
    "simplify_expr", "simplify_bool", "same_value",
    "substitute_param", "rename_names",
]
