"""Candidate postcondition generation, evaluation and test-suite validation.

Assertion expressions are nested tuples::

    ("old", x) | ("var", x) | ("result",) | ("const", v) | ("len", a)
    ("elem", ("old"|"var", a), index)       int terms
    ("arith", op, l, r)                     int expressions, op in + -
    ("rel", op, l, r) | ("bvar", term)      atoms
    ("not", b) | ("conn", op, l, r)         op in && || ==>

Depth counts operator nodes: terms are 0, ``bvar`` atoms are 1.
"""
from __future__ import annotations

import enum
import json
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .minilang.ast import ARRAY, BOOL, INT, Program, exit_locals
from .minilang.interp import OK, ExecutionRecord, wrap32

REL_OPS = ("==", "!=", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-")
CONNECTIVES = ("&&", "||", "==>")
CONSTANTS = (0, 1, -1)
DEFAULT_MAX_DEPTH = 3


class Verdict(enum.Enum):
    HOLDS = "holds"
    FALSIFIED = "falsified"
    INAPPLICABLE = "inapplicable"


class UnboundSymbol(KeyError):
    pass


# -- rendering ---------------------------------------------------------------

def render(e) -> str:
    k = e[0]
    if k == "old":
        return f"old({e[1]})"
    if k == "var":
        return e[1]
    if k == "result":
        return "result"
    if k == "const":
        return str(e[1])
    if k == "len":
        return f"len({e[1]})"
    if k == "elem":
        return f"{render(e[1])}[{render(e[2])}]"
    if k == "arith":
        right = render(e[3])
        if e[3][0] == "arith":
            right = f"({right})"
        return f"{render(e[2])} {e[1]} {right}"
    if k == "rel":
        return f"{render(e[2])} {e[1]} {render(e[3])}"
    if k == "bvar":
        return render(e[1])
    if k == "not":
        inner = render(e[1])
        return f"!{inner}" if e[1][0] == "bvar" else f"!({inner})"
    if k == "conn":
        parts = []
        for child in (e[2], e[3]):
            text = render(child)
            parts.append(f"({text})" if child[0] == "conn" else text)
        return f"{parts[0]} {e[1]} {parts[1]}"
    raise ValueError(f"bad assertion node {e!r}")


def depth(e) -> int:
    k = e[0]
    if k in ("old", "var", "result", "const", "len", "elem"):
        return 0
    if k == "bvar":
        return 1
    if k == "not":
        return 1 + depth(e[1])
    return 1 + max(depth(e[2]), depth(e[3]))


# -- evaluation --------------------------------------------------------------

class _OutOfBounds(Exception):
    pass


def _compile(e) -> Callable:
    k = e[0]
    if k == "const":
        v = e[1]
        return lambda pre, post, res: v
    if k == "old":
        name = e[1]

        def f(pre, post, res):
            try:
                return pre[name]
            except KeyError:
                raise UnboundSymbol(f"old({name})") from None
        return f
    if k == "var":
        name = e[1]

        def f(pre, post, res):
            try:
                return post[name]
            except KeyError:
                raise UnboundSymbol(name) from None
        return f
    if k == "result":
        def f(pre, post, res):
            if res is None:
                raise UnboundSymbol("result")
            return res
        return f
    if k == "len":
        arr = _compile(("var", e[1]))
        return lambda pre, post, res: len(arr(pre, post, res))
    if k == "elem":
        arr, idx = _compile(e[1]), _compile(e[2])

        def f(pre, post, res):
            a, i = arr(pre, post, res), idx(pre, post, res)
            if not 0 <= i < len(a):
                raise _OutOfBounds
            return a[i]
        return f
    if k == "arith":
        l, r = _compile(e[2]), _compile(e[3])
        if e[1] == "+":
            return lambda pre, post, res: wrap32(l(pre, post, res) + r(pre, post, res))
        return lambda pre, post, res: wrap32(l(pre, post, res) - r(pre, post, res))
    if k == "rel":
        l, r = _compile(e[2]), _compile(e[3])
        op = _RELS[e[1]]
        return lambda pre, post, res: op(l(pre, post, res), r(pre, post, res))
    if k == "bvar":
        return _compile(e[1])
    if k == "not":
        b = _compile(e[1])
        return lambda pre, post, res: not b(pre, post, res)
    if k == "conn":
        l, r = _compile(e[2]), _compile(e[3])
        if e[1] == "&&":
            return lambda pre, post, res: l(pre, post, res) and r(pre, post, res)
        if e[1] == "||":
            return lambda pre, post, res: l(pre, post, res) or r(pre, post, res)
        return lambda pre, post, res: (not l(pre, post, res)) or r(pre, post, res)
    raise ValueError(f"bad assertion node {e!r}")


_RELS = {
    "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True)
class Assertion:
    expr: tuple
    text: str = ""
    _fn: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.text:
            object.__setattr__(self, "text", render(self.expr))

    @property
    def depth(self) -> int:
        return depth(self.expr)

    def __reduce__(self):
        # the compiled closure is rebuilt lazily
        return (Assertion, (self.expr, self.text))

    def check(self, pre, post, result) -> bool:
        fn = self._fn
        if fn is None:
            fn = _compile(self.expr)
            object.__setattr__(self, "_fn", fn)
        try:
            return bool(fn(pre, post, result))
        except _OutOfBounds:
            # an assertion that cannot be evaluated does not hold
            return False


def evaluate_assertion(a: Assertion, rec: ExecutionRecord) -> Verdict:
    if rec.status != OK:
        return Verdict.INAPPLICABLE
    if a.check(rec.pre_state, rec.post_state, rec.result):
        return Verdict.HOLDS
    return Verdict.FALSIFIED


def validate(candidates: Sequence[Assertion],
             records: Sequence[ExecutionRecord]) -> List[Assertion]:
    """Keep the candidates that no original-program record falsifies."""
    return [a for a in candidates
            if all(evaluate_assertion(a, r) is not Verdict.FALSIFIED for r in records)]


def validation_report(candidates: Sequence[Assertion],
                      records: Sequence[ExecutionRecord]) -> List[dict]:
    rows = []
    for a in candidates:
        verdicts = [evaluate_assertion(a, r) for r in records]
        rows.append({"text": a.text,
                     "n_holds": sum(v is Verdict.HOLDS for v in verdicts),
                     "n_inapplicable": sum(v is Verdict.INAPPLICABLE for v in verdicts),
                     "valid": Verdict.FALSIFIED not in verdicts})
    return rows


# -- grammar -----------------------------------------------------------------

@dataclass(frozen=True)
class AssertionGrammar:
    int_terms: Tuple[tuple, ...]
    bool_terms: Tuple[tuple, ...]
    rel_ops: Tuple[str, ...] = REL_OPS
    arith_ops: Tuple[str, ...] = ARITH_OPS
    connectives: Tuple[str, ...] = CONNECTIVES
    max_depth: int = DEFAULT_MAX_DEPTH

    def to_text(self) -> str:
        lines = [f"max_depth = {self.max_depth}",
                 "int_term := " + " | ".join(render(t) for t in self.int_terms),
                 "bool_term := " + " | ".join(render(t) for t in self.bool_terms),
                 "int_expr := int_term | int_term arith_op int_term",
                 "arith_op := " + " | ".join(self.arith_ops),
                 "atom := int_expr rel_op int_expr" +
                 (" | bool_term" if self.bool_terms else ""),
                 "rel_op := " + " | ".join(self.rel_ops),
                 "assertion := atom | '!' assertion | assertion connective assertion",
                 "connective := " + " | ".join(self.connectives)]
        return "\n".join(lines) + "\n"


def extract_grammar(program: Program, function: str,
                    max_depth: int = DEFAULT_MAX_DEPTH) -> AssertionGrammar:
    """Terms over the parameters (pre and post), exit-live locals and result."""
    fn = program.function(function)
    ints, bools, arrays = [], [], []
    int_params = [p for p, ty in fn.params if ty == INT]
    for p, ty in fn.params:
        if ty == INT:
            ints += [("old", p), ("var", p)]
        elif ty == BOOL:
            bools += [("old", p), ("var", p)]
        else:
            arrays.append(p)
    for name, ty in exit_locals(fn):
        if ty == INT:
            ints.append(("var", name))
        elif ty == BOOL:
            bools.append(("var", name))
        else:
            arrays.append(name)
    params = set(fn.param_names)
    if fn.return_type == INT:
        ints.append(("result",))
    elif fn.return_type == BOOL:
        bools.append(("result",))
    ints += [("const", c) for c in CONSTANTS]
    indices = [("const", 0)] + [("old", p) for p in int_params]
    for a in arrays:
        ints.append(("len", a))
        refs = [("old", a), ("var", a)] if a in params else [("var", a)]
        for ref in refs:
            for i in indices:
                ints.append(("elem", ref, i))
    return AssertionGrammar(tuple(ints), tuple(bools), max_depth=max_depth)


# -- fuzzing -----------------------------------------------------------------

def _has_symbol(e) -> bool:
    if e[0] == "const":
        return False
    if e[0] in ("old", "var", "result", "len", "elem"):
        return True
    return any(_has_symbol(c) for c in e[1:] if isinstance(c, tuple))


def is_syntactic_tautology(e) -> bool:
    """Relations/connectives with identical sides, or relations over constants."""
    if e[0] == "rel":
        return e[2] == e[3] or not (_has_symbol(e[2]) or _has_symbol(e[3]))
    if e[0] == "conn":
        return e[2] == e[3] or is_syntactic_tautology(e[2]) or is_syntactic_tautology(e[3])
    if e[0] == "not":
        return is_syntactic_tautology(e[1])
    return False


class _Deriver:
    """Uniform choice among the productions of::

        assertion := atom | compound
        compound  := '!' assertion | assertion connective assertion
        atom      := int_expr rel_op int_expr | bool_term
        int_expr  := int_term | int_term arith_op int_term
    """

    def __init__(self, grammar: AssertionGrammar, rng: random.Random):
        self.g, self.rng = grammar, rng

    def assertion(self, budget: int):
        if budget >= 2 and self.rng.random() < 0.5:
            choice = self.rng.choice(("not",) + tuple(self.g.connectives))
            if choice == "not":
                return ("not", self.assertion(budget - 1))
            return ("conn", choice, self.assertion(budget - 1), self.assertion(budget - 1))
        return self.atom(budget)

    def atom(self, budget: int):
        if self.g.bool_terms and self.rng.random() < 0.5:
            return ("bvar", self.rng.choice(self.g.bool_terms))
        op = self.rng.choice(self.g.rel_ops)
        return ("rel", op, self.int_expr(budget - 1), self.int_expr(budget - 1))

    def int_expr(self, budget: int):
        if budget >= 1 and self.rng.random() < 0.5:
            op = self.rng.choice(self.g.arith_ops)
            return ("arith", op, self.rng.choice(self.g.int_terms),
                    self.rng.choice(self.g.int_terms))
        return self.rng.choice(self.g.int_terms)


def fuzz_assertions(grammar: AssertionGrammar, n: int, seed: int,
                    max_attempts: Optional[int] = None) -> List[Assertion]:
    """Up to ``n`` distinct candidates from seeded uniform derivations."""
    if n <= 0:
        raise ValueError("n must be positive")
    rng = random.Random(seed)
    deriver = _Deriver(grammar, rng)
    seen: Dict[str, Assertion] = {}
    attempts = max_attempts if max_attempts is not None else 20 * n
    for _ in range(attempts):
        if len(seen) >= n:
            break
        e = deriver.assertion(grammar.max_depth)
        if is_syntactic_tautology(e):
            continue
        a = Assertion(e)
        seen.setdefault(a.text, a)
    return list(seen.values())


def int_exprs(grammar: AssertionGrammar, budget: int) -> List[tuple]:
    """Every int expression derivable within ``budget`` levels."""
    out = list(grammar.int_terms)
    if budget >= 1:
        out += [("arith", op, l, r) for op in grammar.arith_ops
                for l in grammar.int_terms for r in grammar.int_terms]
    return out


def atoms(grammar: AssertionGrammar, budget: int) -> List[tuple]:
    """Every atom derivable within ``budget`` levels (budget >= 1)."""
    ints = int_exprs(grammar, budget - 1)
    out = [("rel", op, l, r) for op in grammar.rel_ops for l in ints for r in ints]
    return out + [("bvar", t) for t in grammar.bool_terms]


# -- text parsing ------------------------------------------------------------

_ATOK = re.compile(r"\s*(==>|==|!=|<=|>=|&&|\|\||-?\d+|[A-Za-z_][A-Za-z0-9_]*|[-+<>!()\[\]])")


def parse_assertion(text: str) -> Assertion:
    """Inverse of the canonical rendering."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _ATOK.match(text, pos)
        if not m:
            raise ValueError(f"cannot tokenize assertion at {text[pos:]!r}")
        tokens.append(m.group(1))
        pos = m.end()
    p = _AParser(tokens)
    e = p.implication()
    if p.i != len(tokens):
        raise ValueError(f"trailing tokens in assertion {text!r}")
    return Assertion(e)


class _AParser:
    def __init__(self, tokens):
        self.t, self.i = tokens, 0

    def peek(self):
        return self.t[self.i] if self.i < len(self.t) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise ValueError(f"expected {expected!r}, found {tok!r}")
        self.i += 1
        return tok

    def implication(self):
        left = self.disj()
        if self.peek() == "==>":
            self.take()
            return ("conn", "==>", left, self.implication())
        return left

    def disj(self):
        left = self.conj()
        while self.peek() == "||":
            self.take()
            left = ("conn", "||", left, self.conj())
        return left

    def conj(self):
        left = self.unary()
        while self.peek() == "&&":
            self.take()
            left = ("conn", "&&", left, self.unary())
        return left

    def unary(self):
        if self.peek() == "!":
            self.take()
            return ("not", self.unary())
        if self.peek() == "(":
            self.take()
            e = self.implication()
            self.take(")")
            return e
        left = self.int_expr()
        if self.peek() in REL_OPS:
            op = self.take()
            return ("rel", op, left, self.int_expr())
        return ("bvar", left)

    def int_expr(self):
        left = self.int_primary()
        while self.peek() in ARITH_OPS:
            op = self.take()
            left = ("arith", op, left, self.int_primary())
        return left

    def int_primary(self):
        tok = self.take()
        if tok == "(":
            e = self.int_expr()
            self.take(")")
            return e
        if re.fullmatch(r"-?\d+", tok):
            return ("const", int(tok))
        if tok == "old":
            self.take("(")
            name = self.take()
            self.take(")")
            base = ("old", name)
        elif tok == "len":
            self.take("(")
            name = self.take()
            self.take(")")
            return ("len", name)
        elif tok == "result":
            return ("result",)
        else:
            base = ("var", tok)
        if self.peek() == "[":
            self.take()
            idx = self.int_expr()
            self.take("]")
            return ("elem", base, idx)
        return base


def write_catalog(assertions: Sequence[Assertion], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in assertions:
            fh.write(json.dumps({"text": a.text, "depth": a.depth}) + "\n")


def read_catalog(path) -> List[Assertion]:
    with open(path, encoding="utf-8") as fh:
        return [parse_assertion(json.loads(line)["text"]) for line in fh if line.strip()]
