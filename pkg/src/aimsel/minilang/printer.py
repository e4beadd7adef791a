"""Canonical printing: a single-space separated token stream.

``print_tokens`` also reports, for every statement ordinal, the token span of
that statement's *head*: the whole statement for simple statements, and the
``if (...)`` / ``while (...)`` header for compound ones.
"""
from __future__ import annotations

from typing import Dict, List, Tuple

from .ast import (
    ARRAY, Assign, Binary, BoolLit, Call, ExprStmt, Function, If, Index,
    IntLit, Len, NewArray, Program, Return, Store, Unary, Var, VarDecl, While,
)

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6}
_UNARY_PREC = 7
_ATOM_PREC = 8


def _prec(e) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _UNARY_PREC
    return _ATOM_PREC


def expr_tokens(e, out: List[str]) -> None:
    if isinstance(e, IntLit):
        if e.value < 0:
            out += ["-", str(-e.value)]
        else:
            out.append(str(e.value))
    elif isinstance(e, BoolLit):
        out.append("true" if e.value else "false")
    elif isinstance(e, Var):
        out.append(e.name)
    elif isinstance(e, Index):
        out += [e.name, "["]
        expr_tokens(e.index, out)
        out.append("]")
    elif isinstance(e, Len):
        out += ["len", "(", e.name, ")"]
    elif isinstance(e, NewArray):
        out += ["new", "int", "["]
        expr_tokens(e.size, out)
        out.append("]")
    elif isinstance(e, Call):
        out += [e.name, "("]
        for i, a in enumerate(e.args):
            if i:
                out.append(",")
            expr_tokens(a, out)
        out.append(")")
    elif isinstance(e, Unary):
        out.append(e.op)
        # a bare literal after '-' would re-parse as a negative literal
        wrap = isinstance(e.operand, (Binary, IntLit))
        _maybe_paren(e.operand, wrap, out)
    elif isinstance(e, Binary):
        p = _PREC[e.op]
        _maybe_paren(e.left, _prec(e.left) < p, out)
        out.append(e.op)
        _maybe_paren(e.right, _prec(e.right) <= p, out)
    else:
        raise TypeError(f"not an expression: {e!r}")


def _maybe_paren(e, wrap: bool, out: List[str]) -> None:
    if wrap:
        out.append("(")
        expr_tokens(e, out)
        out.append(")")
    else:
        expr_tokens(e, out)


def _type_tokens(ty: str) -> List[str]:
    return ["int", "[", "]"] if ty == ARRAY else [ty]


class _Printer:
    def __init__(self):
        self.out: List[str] = []
        self.spans: Dict[int, Tuple[int, int]] = {}

    def function(self, fn: Function):
        out = self.out
        out += ["fn", fn.name, "("]
        for i, (p, ty) in enumerate(fn.params):
            if i:
                out.append(",")
            out += [p, ":"] + _type_tokens(ty)
        out.append(")")
        if fn.return_type is not None:
            out += ["->"] + _type_tokens(fn.return_type)
        self.block(fn.body)

    def block(self, body):
        self.out.append("{")
        for s in body:
            self.stmt(s)
        self.out.append("}")

    def stmt(self, s):
        out = self.out
        start = len(out)
        if isinstance(s, VarDecl):
            out += ["var", s.name, ":"] + _type_tokens(s.type) + ["="]
            expr_tokens(s.init, out)
            out.append(";")
        elif isinstance(s, Assign):
            out += [s.name, "="]
            expr_tokens(s.value, out)
            out.append(";")
        elif isinstance(s, Store):
            out += [s.name, "["]
            expr_tokens(s.offset, out)
            out += ["]", "="]
            expr_tokens(s.value, out)
            out.append(";")
        elif isinstance(s, Return):
            out.append("return")
            if s.value is not None:
                expr_tokens(s.value, out)
            out.append(";")
        elif isinstance(s, ExprStmt):
            expr_tokens(s.call, out)
            out.append(";")
        elif isinstance(s, If):
            out += ["if", "("]
            expr_tokens(s.cond, out)
            out.append(")")
            self.spans[s.index] = (start, len(out))
            self.block(s.then)
            if s.orelse:
                out.append("else")
                if len(s.orelse) == 1 and isinstance(s.orelse[0], If):
                    self.stmt(s.orelse[0])
                else:
                    self.block(s.orelse)
            return
        elif isinstance(s, While):
            out += ["while", "("]
            expr_tokens(s.cond, out)
            out.append(")")
            self.spans[s.index] = (start, len(out))
            self.block(s.body)
            return
        else:
            raise TypeError(f"not a statement: {s!r}")
        self.spans[s.index] = (start, len(out))


def print_tokens(program: Program) -> Tuple[List[str], Dict[int, Tuple[int, int]]]:
    """Canonical tokens of ``program`` and statement-ordinal -> [start, end) spans."""
    p = _Printer()
    for fn in program.functions:
        p.function(fn)
    return p.out, p.spans


def pretty_print(program: Program) -> str:
    return " ".join(print_tokens(program)[0])


def expr_text(e) -> str:
    out: List[str] = []
    expr_tokens(e, out)
    return " ".join(out)
