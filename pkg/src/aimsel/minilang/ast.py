"""AST node types for the mini-language.

Nodes are frozen dataclasses so structural equality comes for free.
Bookkeeping fields (statement ordinals, inferred expression types, source
text) are excluded from comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

INT = "int"
BOOL = "bool"
ARRAY = "int[]"
TYPES = (INT, BOOL, ARRAY)

ARITH_OPS = ("+", "-", "*", "/", "%")
REL_OPS = ("<", "<=", ">", ">=", "==", "!=")
LOGIC_OPS = ("&&", "||")


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int
    ty: str = field(default=INT, compare=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    ty: str = field(default=BOOL, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    ty: str = field(default="", compare=False)


@dataclass(frozen=True)
class Index:
    name: str
    index: "Expr"
    ty: str = field(default=INT, compare=False)


@dataclass(frozen=True)
class Len:
    name: str
    ty: str = field(default=INT, compare=False)


@dataclass(frozen=True)
class NewArray:
    size: "Expr"
    ty: str = field(default=ARRAY, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...]
    ty: str = field(default="", compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    ty: str = field(default="", compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    ty: str = field(default="", compare=False)


Expr = Union[IntLit, BoolLit, Var, Index, Len, NewArray, Call, Unary, Binary]


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class VarDecl:
    name: str
    type: str
    init: Expr
    index: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr
    index: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Store:
    name: str
    offset: Expr
    value: Expr
    index: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Tuple["Stmt", ...]
    orelse: Tuple["Stmt", ...] = ()
    index: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Tuple["Stmt", ...]
    index: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None
    index: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class ExprStmt:
    call: Call
    index: int = field(default=-1, compare=False)


Stmt = Union[VarDecl, Assign, Store, If, While, Return, ExprStmt]


@dataclass(frozen=True)
class Function:
    name: str
    params: Tuple[Tuple[str, str], ...]
    return_type: Optional[str]
    body: Tuple[Stmt, ...]

    @property
    def param_names(self) -> Tuple[str, ...]:
        return tuple(p for p, _ in self.params)


@dataclass(frozen=True)
class Program:
    functions: Tuple[Function, ...]
    source_text: str = field(default="", compare=False, repr=False)

    def function(self, name: str) -> Function:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(f"no function named {name!r}")


def walk_statements(body):
    """Yield every statement of ``body`` in textual (pre-order) order."""
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            yield from walk_statements(stmt.then)
            yield from walk_statements(stmt.orelse)
        elif isinstance(stmt, While):
            yield from walk_statements(stmt.body)


def contains_return(stmt) -> bool:
    return any(isinstance(s, Return) for s in walk_statements((stmt,)))


def exit_locals(fn: Function) -> Tuple[Tuple[str, str], ...]:
    """Top-level locals guaranteed to be bound whenever ``fn`` exits normally.

    These are the top-level declarations that precede the first statement
    able to return.
    """
    out = []
    for stmt in fn.body:
        if contains_return(stmt):
            break
        if isinstance(stmt, VarDecl):
            out.append((stmt.name, stmt.type))
    return tuple(out)
