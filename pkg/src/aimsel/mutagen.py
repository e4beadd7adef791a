"""First-order mutant generation with Major-style operator families.

====  ==================================================================
AOR   arithmetic operator replacement over ``+ - * / %``
ROR   relational operator replacement over ``< <= > >= == !=``
      (``==``/``!=`` only swap with each other when comparing booleans)
COR   ``&&`` <-> ``||``
ORU   operator insertion: negate an arithmetic operand, or ``!`` on a
      condition / logical operand
LVR   literal replacement: ints -> {0, 1, -1, v+1, v-1}, bools flipped
STD   statement deletion (never declarations or returns)
====  ==================================================================
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .minilang.ast import (
    ARITH_OPS, BOOL, INT, LOGIC_OPS, REL_OPS, Assign, Binary, BoolLit, Call,
    ExprStmt, Function, If, Index, IntLit, NewArray, Program, Return, Store,
    Unary, VarDecl, While, walk_statements,
)
from .minilang.interp import wrap32
from .minilang.parser import _always_returns
from .minilang.printer import pretty_print, print_tokens

OPERATOR_TAGS = ("AOR", "ROR", "COR", "ORU", "LVR", "STD")


@dataclass(frozen=True)
class MutationOperator:
    tag: str
    from_token: str
    to_token: str

    def __post_init__(self):
        if self.tag not in OPERATOR_TAGS:
            raise ValueError(f"unknown operator tag {self.tag}")
        if self.from_token == self.to_token:
            raise ValueError("mutation must change the token")


@dataclass(frozen=True)
class Mutant:
    id: int
    operator: MutationOperator
    statement_index: int
    node_path: Tuple[str, ...]
    program: Program = field(repr=False, compare=False)
    # head span of the mutated statement in the original canonical token stream
    span: Tuple[int, int] = field(default=(0, 0), compare=False)

    def to_json(self) -> dict:
        return {"id": self.id, "operator_tag": self.operator.tag,
                "from": self.operator.from_token, "to": self.operator.to_token,
                "statement_index": self.statement_index,
                "node_path": list(self.node_path)}


# -- expression rewriting ----------------------------------------------------

def _children(e) -> List[Tuple[str, object]]:
    if isinstance(e, Binary):
        return [("left", e.left), ("right", e.right)]
    if isinstance(e, Unary):
        return [("operand", e.operand)]
    if isinstance(e, Index):
        return [("index", e.index)]
    if isinstance(e, NewArray):
        return [("size", e.size)]
    if isinstance(e, Call):
        return [(f"args[{i}]", a) for i, a in enumerate(e.args)]
    return []


def _stmt_exprs(s) -> List[Tuple[str, object]]:
    if isinstance(s, VarDecl):
        return [("init", s.init)]
    if isinstance(s, Assign):
        return [("value", s.value)]
    if isinstance(s, Store):
        return [("offset", s.offset), ("value", s.value)]
    if isinstance(s, (If, While)):
        return [("cond", s.cond)]
    if isinstance(s, Return):
        return [] if s.value is None else [("value", s.value)]
    if isinstance(s, ExprStmt):
        return [("call", s.call)]
    return []


def replace_at(node, path: Sequence[str], new):
    """Return a copy of ``node`` with the sub-node at ``path`` replaced."""
    if not path:
        return new
    seg, rest = path[0], path[1:]
    if seg.endswith("]"):
        name, i = seg[:-1].split("[")
        items = list(getattr(node, name))
        items[int(i)] = replace_at(items[int(i)], rest, new)
        return dataclasses.replace(node, **{name: tuple(items)})
    return dataclasses.replace(node, **{seg: replace_at(getattr(node, seg), rest, new)})


def _rewrite_body(body, index: int, fn):
    out = []
    for s in body:
        if s.index == index:
            s = fn(s)
            if s is not None:
                out.append(s)
            continue
        if isinstance(s, If):
            s = dataclasses.replace(s, then=_rewrite_body(s.then, index, fn),
                                    orelse=_rewrite_body(s.orelse, index, fn))
        elif isinstance(s, While):
            s = dataclasses.replace(s, body=_rewrite_body(s.body, index, fn))
        out.append(s)
    return tuple(out)


# -- operator sites ----------------------------------------------------------

def _lvr_values(v: int) -> List[int]:
    out = []
    for c in (0, 1, -1, wrap32(v + 1), wrap32(v - 1)):
        if c != v and c not in out:
            out.append(c)
    return out


def _expr_mutations(e, parent) -> Iterable[Tuple[MutationOperator, object]]:
    """(operator, replacement node) pairs for one expression node, in tag order."""
    if isinstance(e, Binary) and e.op in ARITH_OPS:
        for op in ARITH_OPS:
            if op != e.op:
                yield MutationOperator("AOR", e.op, op), dataclasses.replace(e, op=op)
    if isinstance(e, Binary) and e.op in REL_OPS:
        family = REL_OPS if e.left.ty == INT else ("==", "!=")
        for op in family:
            if op != e.op:
                yield MutationOperator("ROR", e.op, op), dataclasses.replace(e, op=op)
    if isinstance(e, Binary) and e.op in LOGIC_OPS:
        op = "||" if e.op == "&&" else "&&"
        yield MutationOperator("COR", e.op, op), dataclasses.replace(e, op=op)
    is_neg = isinstance(e, Unary) and e.op == "-"
    is_not = isinstance(e, Unary) and e.op == "!"
    if parent == "arith" and e.ty == INT and not is_neg:
        yield MutationOperator("ORU", "", "-"), Unary("-", e, INT)
    if parent in ("cond", "logic") and e.ty == BOOL and not is_not:
        yield MutationOperator("ORU", "", "!"), Unary("!", e, BOOL)
    if isinstance(e, IntLit):
        for v in _lvr_values(e.value):
            yield MutationOperator("LVR", str(e.value), str(v)), IntLit(v)
    if isinstance(e, BoolLit):
        yield (MutationOperator("LVR", _btext(e.value), _btext(not e.value)),
               BoolLit(not e.value))


def _btext(b: bool) -> str:
    return "true" if b else "false"


def _walk_expr(e, path, parent):
    yield e, path, parent
    if isinstance(e, Binary):
        kind = "arith" if e.op in ARITH_OPS else "logic" if e.op in LOGIC_OPS else None
    else:
        kind = None
    for name, child in _children(e):
        yield from _walk_expr(child, path + (name,), kind)


_STD_KIND = {Assign: "assign", Store: "store", If: "if", While: "while", ExprStmt: "call"}


def generate_mutants(program: Program, function: str,
                     operators: Optional[Iterable[str]] = None) -> List[Mutant]:
    """Exhaustively apply every enabled operator at every site of ``function``.

    Mutants come out in (statement, pre-order node, operator) order with dense
    ids starting at 0.
    """
    enabled = set(OPERATOR_TAGS if operators is None else operators)
    unknown = enabled - set(OPERATOR_TAGS)
    if unknown:
        raise ValueError(f"unknown operator tags: {sorted(unknown)}")
    fn = program.function(function)
    _, spans = print_tokens(program)
    raw = []
    for stmt in walk_statements(fn.body):
        if "STD" in enabled and type(stmt) in _STD_KIND:
            body = _rewrite_body(fn.body, stmt.index, lambda s: None)
            if fn.return_type is None or _always_returns(body):
                raw.append((stmt, (), MutationOperator("STD", _STD_KIND[type(stmt)], ""), body))
        for field_name, root in _stmt_exprs(stmt):
            parent = "cond" if isinstance(stmt, (If, While)) else None
            for node, path, kind in _walk_expr(root, (field_name,), parent):
                for op, repl in _expr_mutations(node, kind):
                    if op.tag not in enabled:
                        continue
                    body = _rewrite_body(fn.body, stmt.index,
                                         lambda s, p=path, r=repl: replace_at(s, p, r))
                    raw.append((stmt, path, op, body))
    mutants = []
    for i, (stmt, path, op, body) in enumerate(raw):
        new_fn = dataclasses.replace(fn, body=body)
        prog = Program(tuple(new_fn if f.name == function else f for f in program.functions))
        mutants.append(Mutant(i, op, stmt.index, path, prog, spans[stmt.index]))
    return mutants


def mutated_source(original: Program, mutant: Mutant) -> str:
    return pretty_print(mutant.program)


def write_catalog(mutants: Sequence[Mutant], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in mutants:
            fh.write(json.dumps(m.to_json(), sort_keys=True) + "\n")


def read_catalog(path) -> List[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def run_mutants(mutants: Sequence[Mutant], tests, step_limit: int):
    """Execution records per mutant (outer) and test (inner)."""
    from .minilang.interp import run_suite
    return [run_suite(m.program, tests, step_limit) for m in mutants]
