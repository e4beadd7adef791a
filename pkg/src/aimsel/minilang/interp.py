"""Tree-walking evaluator with a deterministic step budget.

Integers are 32-bit two's complement (wrap on overflow, division truncates
toward zero).  One step is charged per executed statement and per loop-guard
evaluation, so an empty ``while (true) {}`` still exhausts the budget.
"""
from __future__ import annotations

import operator
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .ast import (
    ARRAY, BOOL, INT, Assign, Binary, BoolLit, Call, ExprStmt, If, Index,
    IntLit, Len, NewArray, Program, Return, Store, Unary, Var, VarDecl, While,
    exit_locals,
)

OK = "ok"
RUNTIME_ERROR = "runtime-error"
STEP_LIMIT = "step-limit"

DEFAULT_STEP_LIMIT = 100_000
MAX_CALL_DEPTH = 64


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    function_name: str
    args: Tuple[Any, ...]

    def __post_init__(self):
        # arrays are stored as tuples so test cases stay immutable
        object.__setattr__(self, "args", tuple(
            tuple(a) if isinstance(a, list) else a for a in self.args))

    def to_json(self) -> dict:
        return {"function": self.function_name,
                "args": [list(a) if isinstance(a, tuple) else a for a in self.args]}

    @classmethod
    def from_json(cls, obj: dict) -> "TestCase":
        return cls(obj["function"], tuple(obj["args"]))


@dataclass(frozen=True)
class ExecutionRecord:
    pre_state: Dict[str, Any]
    post_state: Dict[str, Any]
    result: Any = None
    status: str = OK

    def observable(self) -> tuple:
        """Hashable (status, result, post_state) triple used for kill decisions."""
        return (self.status, self.result, tuple(sorted(self.post_state.items())))


def check_test(program: Program, test: TestCase) -> None:
    fn = program.function(test.function_name)
    if len(fn.params) != len(test.args):
        raise ValueError(f"{fn.name} expects {len(fn.params)} arguments, got {len(test.args)}")
    for (name, ty), arg in zip(fn.params, test.args):
        ok = (ty == BOOL and isinstance(arg, bool)) or \
             (ty == INT and isinstance(arg, int) and not isinstance(arg, bool)) or \
             (ty == ARRAY and isinstance(arg, tuple) and
              all(isinstance(x, int) and not isinstance(x, bool) for x in arg))
        if not ok:
            raise ValueError(f"argument {name} of {fn.name} must be {ty}, got {arg!r}")


def wrap32(x: int) -> int:
    return ((x + 0x80000000) & 0xFFFFFFFF) - 0x80000000


class _Fault(Exception):
    def __init__(self, status: str):
        self.status = status


_MASK = 0xFFFFFFFF
_BIAS = 0x80000000
# a loop whose frame repeats a state seen at an earlier guard re-check can
# never terminate; after this many iterations we start looking for that
_CYCLE_WATCH_AFTER = 256


def _div(a, b):
    if b == 0:
        raise _Fault(RUNTIME_ERROR)
    q = abs(a) // abs(b)
    return wrap32(q if (a < 0) == (b < 0) else -q)


def _mod(a, b):
    if b == 0:
        raise _Fault(RUNTIME_ERROR)
    r = abs(a) % abs(b)
    return r if a >= 0 else -r


_BINOPS = {
    "+": lambda a, b: ((a + b + _BIAS) & _MASK) - _BIAS,
    "-": lambda a, b: ((a - b + _BIAS) & _MASK) - _BIAS,
    "*": lambda a, b: ((a * b + _BIAS) & _MASK) - _BIAS,
    "/": _div,
    "%": _mod,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}


def _snapshot(env):
    return tuple((k, tuple(v) if type(v) is list else v) for k, v in env.items())


class Interpreter:
    """Evaluates a program compiled to nested closures.

    Every closure takes ``(env, interp)``; statements return ``None`` or a
    1-tuple carrying a return value.
    """

    def __init__(self, program: Program, step_limit: int = DEFAULT_STEP_LIMIT):
        self.functions = {fn.name: fn for fn in program.functions}
        self.step_limit = step_limit
        self.steps = 0
        self.depth = 0
        self._bodies: Dict[str, Any] = {}

    def call(self, fn, args, env):
        self.depth += 1
        if self.depth > MAX_CALL_DEPTH:
            raise _Fault(RUNTIME_ERROR)
        body = self._bodies.get(fn.name)
        if body is None:
            body = self._bodies[fn.name] = _block(fn.body)
        for (p, _), a in zip(fn.params, args):
            env[p] = a
        r = body(env, self)
        self.depth -= 1
        return None if r is None else r[0]

    def eval(self, e, env):
        return _expr(e)(env, self)


def _block(body):
    stmts = tuple(_stmt(s) for s in body)

    def run(env, rt):
        for s in stmts:
            rt.steps += 1
            if rt.steps > rt.step_limit:
                raise _Fault(STEP_LIMIT)
            r = s(env, rt)
            if r is not None:
                return r
        return None
    return run


def _stmt(s):
    t = type(s)
    if t is Assign or t is VarDecl:
        name, value = s.name, _expr(s.value if t is Assign else s.init)

        def assign(env, rt):
            env[name] = value(env, rt)
        return assign
    if t is Store:
        name, offset, value = s.name, _expr(s.offset), _expr(s.value)

        def store(env, rt):
            arr = env[name]
            i = offset(env, rt)
            v = value(env, rt)
            if not 0 <= i < len(arr):
                raise _Fault(RUNTIME_ERROR)
            arr[i] = v
        return store
    if t is If:
        cond, then, orelse = _expr(s.cond), _block(s.then), _block(s.orelse)

        def if_(env, rt):
            return then(env, rt) if cond(env, rt) else orelse(env, rt)
        return if_
    if t is While:
        cond, body = _expr(s.cond), _block(s.body)

        def while_(env, rt):
            n = 0
            seen = None
            while cond(env, rt):
                r = body(env, rt)
                if r is not None:
                    return r
                rt.steps += 1
                if rt.steps > rt.step_limit:
                    raise _Fault(STEP_LIMIT)
                n += 1
                if n >= _CYCLE_WATCH_AFTER:
                    if seen is None:
                        seen = {}
                    key = _snapshot(env)
                    first = seen.get(key)
                    if first is None:
                        seen[key] = rt.steps
                    else:
                        # periodic from here on: skip whole periods, keeping
                        # at least one so the abort happens in regular stepping
                        period = rt.steps - first
                        skip = (rt.step_limit - rt.steps) // period - 1
                        if skip > 0:
                            rt.steps += skip * period
                        seen = {}
                        n = -(1 << 62)
            return None
        return while_
    if t is Return:
        if s.value is None:
            return lambda env, rt: (None,)
        value = _expr(s.value)
        return lambda env, rt: (value(env, rt),)
    if t is ExprStmt:
        call = _expr(s.call)

        def expr_stmt(env, rt):
            call(env, rt)
        return expr_stmt
    raise TypeError(f"cannot execute {s!r}")


def _expr(e):
    t = type(e)
    if t is Var:
        name = e.name
        return lambda env, rt: env[name]
    if t is IntLit or t is BoolLit:
        v = e.value
        return lambda env, rt: v
    if t is Binary:
        left, right, op = _expr(e.left), _expr(e.right), e.op
        if op == "&&":
            return lambda env, rt: left(env, rt) and right(env, rt)
        if op == "||":
            return lambda env, rt: left(env, rt) or right(env, rt)
        f = _BINOPS[op]
        return lambda env, rt: f(left(env, rt), right(env, rt))
    if t is Index:
        name, index = e.name, _expr(e.index)

        def index_(env, rt):
            arr = env[name]
            i = index(env, rt)
            if not 0 <= i < len(arr):
                raise _Fault(RUNTIME_ERROR)
            return arr[i]
        return index_
    if t is Unary:
        operand = _expr(e.operand)
        if e.op == "!":
            return lambda env, rt: not operand(env, rt)
        return lambda env, rt: wrap32(-operand(env, rt))
    if t is Len:
        name = e.name
        return lambda env, rt: len(env[name])
    if t is Call:
        fname, args = e.name, tuple(_expr(a) for a in e.args)

        def call(env, rt):
            return rt.call(rt.functions[fname], [a(env, rt) for a in args], {})
        return call
    if t is NewArray:
        size = _expr(e.size)

        def new_array(env, rt):
            n = size(env, rt)
            if n < 0:
                raise _Fault(RUNTIME_ERROR)
            return [0] * n
        return new_array
    raise TypeError(f"cannot evaluate {e!r}")


def _freeze(v):
    return tuple(v) if isinstance(v, list) else v


def execute(program: Program, test: TestCase,
            step_limit: int = DEFAULT_STEP_LIMIT) -> ExecutionRecord:
    """Run one test and capture pre-state, post-state, result and status."""
    if step_limit <= 0:
        raise ValueError("step_limit must be positive")
    check_test(program, test)
    fn = program.function(test.function_name)
    pre = {p: a for (p, _), a in zip(fn.params, test.args)}
    args = [list(a) if isinstance(a, tuple) else a for a in test.args]
    observed = fn.param_names + tuple(n for n, _ in exit_locals(fn))
    interp = Interpreter(program, step_limit)
    env: Dict[str, Any] = {}
    status, result = OK, None
    limit = sys.getrecursionlimit()
    if limit < 20_000:
        sys.setrecursionlimit(20_000)
    try:
        result = interp.call(fn, args, env)
    except _Fault as f:
        status = f.status
    except RecursionError:
        status = RUNTIME_ERROR
    finally:
        if limit < 20_000:
            sys.setrecursionlimit(limit)
    post = {n: _freeze(env[n]) for n in observed if n in env}
    return ExecutionRecord(pre, post, result if status == OK else None, status)


def run_suite(program: Program, tests: Sequence[TestCase],
              step_limit: int = DEFAULT_STEP_LIMIT) -> List[ExecutionRecord]:
    return [execute(program, t, step_limit) for t in tests]
