"""Straightforward tree-walking reference evaluator (test oracle only).

Deliberately naive: no compilation, no loop-cycle shortcut.  Used to
cross-check the production evaluator record by record.
"""
import sys

from aimsel.minilang.ast import (
    Assign, Binary, BoolLit, Call, ExprStmt, If, Index, IntLit, Len, NewArray,
    Return, Store, Unary, Var, VarDecl, While, exit_locals,
)
from aimsel.minilang.interp import (
    MAX_CALL_DEPTH, OK, RUNTIME_ERROR, STEP_LIMIT, ExecutionRecord,
)


class Fault(Exception):
    def __init__(self, status):
        self.status = status


def w32(x):
    x &= 0xFFFFFFFF
    return x - (1 << 32) if x >= (1 << 31) else x


def tdiv(a, b):
    if b == 0:
        raise Fault(RUNTIME_ERROR)
    q = abs(a) // abs(b)
    return w32(q if (a < 0) == (b < 0) else -q)


def tmod(a, b):
    if b == 0:
        raise Fault(RUNTIME_ERROR)
    return a - b * int(a / b) if abs(a) < 2 ** 52 else (abs(a) % abs(b)) * (1 if a >= 0 else -1)


class Ref:
    def __init__(self, program, limit):
        self.fns = {f.name: f for f in program.functions}
        self.limit = limit
        self.steps = 0
        self.depth = 0

    def tick(self):
        self.steps += 1
        if self.steps > self.limit:
            raise Fault(STEP_LIMIT)

    def block(self, body, env):
        for s in body:
            self.tick()
            if isinstance(s, (Assign, VarDecl)):
                env[s.name] = self.ev(s.value if isinstance(s, Assign) else s.init, env)
            elif isinstance(s, Store):
                arr = env[s.name]
                i = self.ev(s.offset, env)
                v = self.ev(s.value, env)
                if i < 0 or i >= len(arr):
                    raise Fault(RUNTIME_ERROR)
                arr[i] = v
            elif isinstance(s, If):
                r = self.block(s.then if self.ev(s.cond, env) else s.orelse, env)
                if r is not None:
                    return r
            elif isinstance(s, While):
                while self.ev(s.cond, env):
                    r = self.block(s.body, env)
                    if r is not None:
                        return r
                    self.tick()
            elif isinstance(s, Return):
                return [None if s.value is None else self.ev(s.value, env)]
            elif isinstance(s, ExprStmt):
                self.ev(s.call, env)
        return None

    def call(self, fn, args, env):
        self.depth += 1
        if self.depth > MAX_CALL_DEPTH:
            raise Fault(RUNTIME_ERROR)
        for (p, _), a in zip(fn.params, args):
            env[p] = a
        r = self.block(fn.body, env)
        self.depth -= 1
        return None if r is None else r[0]

    def ev(self, e, env):
        if isinstance(e, Var):
            return env[e.name]
        if isinstance(e, (IntLit, BoolLit)):
            return e.value
        if isinstance(e, Binary):
            if e.op == "&&":
                return self.ev(e.left, env) and self.ev(e.right, env)
            if e.op == "||":
                return self.ev(e.left, env) or self.ev(e.right, env)
            a, b = self.ev(e.left, env), self.ev(e.right, env)
            return {
                "+": lambda: w32(a + b), "-": lambda: w32(a - b), "*": lambda: w32(a * b),
                "/": lambda: tdiv(a, b), "%": lambda: tmod(a, b),
                "<": lambda: a < b, "<=": lambda: a <= b, ">": lambda: a > b,
                ">=": lambda: a >= b, "==": lambda: a == b, "!=": lambda: a != b,
            }[e.op]()
        if isinstance(e, Index):
            arr, i = env[e.name], self.ev(e.index, env)
            if i < 0 or i >= len(arr):
                raise Fault(RUNTIME_ERROR)
            return arr[i]
        if isinstance(e, Unary):
            v = self.ev(e.operand, env)
            return (not v) if e.op == "!" else w32(-v)
        if isinstance(e, Len):
            return len(env[e.name])
        if isinstance(e, Call):
            return self.call(self.fns[e.name], [self.ev(a, env) for a in e.args], {})
        if isinstance(e, NewArray):
            n = self.ev(e.size, env)
            if n < 0:
                raise Fault(RUNTIME_ERROR)
            return [0] * n
        raise TypeError(e)


def ref_execute(program, test, limit):
    fn = program.function(test.function_name)
    pre = {p: a for (p, _), a in zip(fn.params, test.args)}
    env = {}
    args = [list(a) if isinstance(a, tuple) else a for a in test.args]
    status, result = OK, None
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20000))
    try:
        result = Ref(program, limit).call(fn, args, env)
    except Fault as f:
        status = f.status
    finally:
        sys.setrecursionlimit(old)
    names = list(fn.param_names) + [n for n, _ in exit_locals(fn)]
    post = {n: tuple(env[n]) if isinstance(env[n], list) else env[n] for n in names if n in env}
    return ExecutionRecord(pre, post, result if status == OK else None, status)
