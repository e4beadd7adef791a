"""Lexer and type-checking recursive-descent parser for the mini-language.

Grammar (informal)::

    program  := function*
    function := 'fn' NAME '(' [param (',' param)*] ')' ['->' type] block
    param    := NAME ':' type
    type     := 'int' | 'bool' | 'int' '[' ']'
    stmt     := 'var' NAME ':' type '=' expr ';'
              | NAME '=' expr ';' | NAME '[' expr ']' '=' expr ';'
              | 'if' '(' expr ')' block ['else' (block | if-stmt)]
              | 'while' '(' expr ')' block
              | 'return' [expr] ';' | call ';'

Statements receive ordinals in textual (pre-order) order across the whole
program.  Declaration-before-use, shadowing, typing, and the all-paths-return
rule are enforced while parsing.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .ast import (
    ARITH_OPS, ARRAY, BOOL, INT, LOGIC_OPS, REL_OPS,
    Assign, Binary, BoolLit, Call, ExprStmt, Function, If, Index, IntLit, Len,
    NewArray, Program, Return, Store, Unary, Var, VarDecl, While,
)

KEYWORDS = {"fn", "var", "if", "else", "while", "return", "true", "false",
            "int", "bool", "len", "new"}
INT_MAX = 2**31 - 1

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|==|!=|<=|>=|&&|\|\||[-+*/%<>=!(){}\[\],;:])
""", re.VERBOSE)


class MiniError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg, self.line, self.col = msg, line, col
        super().__init__(f"{msg} (line {line}, column {col})" if line else msg)


class MiniSyntaxError(MiniError):
    pass


class MiniSemanticError(MiniError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # 'num', 'name', 'kw', 'op', 'eof'
    text: str
    line: int
    col: int


def tokenize(source: str) -> List[Token]:
    """Split source into tokens, dropping whitespace and ``//`` comments."""
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise MiniSyntaxError(f"unexpected character {source[pos]!r}",
                                  line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("num", "op"):
            tokens.append(Token(kind, text, line, col))
        elif kind == "name":
            tokens.append(Token("kw" if text in KEYWORDS else "name", text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


_BINARY_LEVELS = [("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="),
                  ("+", "-"), ("*", "/", "%")]


class Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0
        self.counter = 0
        self.signatures: Dict[str, Tuple[Tuple[str, ...], Optional[str]]] = {}
        self.scopes: List[Dict[str, str]] = []
        self.current_return: Optional[str] = None

    # -- token helpers -------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            t = self.tok
            found = t.text or "end of input"
            raise MiniSyntaxError(f"expected {text!r}, found {found!r}", t.line, t.col)
        return self.advance()

    def expect_name(self) -> Token:
        t = self.tok
        if t.kind != "name":
            raise MiniSyntaxError(f"expected identifier, found {t.text or 'end of input'!r}",
                                  t.line, t.col)
        return self.advance()

    def semantic(self, msg: str, tok: Token):
        raise MiniSemanticError(msg, tok.line, tok.col)

    # -- scopes --------------------------------------------------------------
    def lookup(self, name: str, tok: Token) -> str:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        self.semantic(f"undeclared variable {name}", tok)

    def declare(self, name: str, ty: str, tok: Token):
        if any(name in scope for scope in self.scopes):
            self.semantic(f"redeclaration of {name}", tok)
        self.scopes[-1][name] = ty

    # -- program -------------------------------------------------------------
    def parse_program(self) -> Program:
        self._collect_signatures()
        functions = []
        while self.tok.kind != "eof":
            functions.append(self.parse_function())
        return Program(tuple(functions), self.source)

    def _collect_signatures(self):
        save = self.pos
        while self.tok.kind != "eof":
            if not self.at("fn"):
                t = self.tok
                raise MiniSyntaxError(f"expected 'fn', found {t.text!r}", t.line, t.col)
            name, params, ret = self.parse_header()
            if name.text in self.signatures:
                self.semantic(f"duplicate function {name.text}", name)
            self.signatures[name.text] = (tuple(t for _, t in params), ret)
            self._skip_block()
        self.pos = save

    def _skip_block(self):
        self.expect("{")
        depth = 1
        while depth:
            t = self.advance()
            if t.kind == "eof":
                raise MiniSyntaxError("unterminated block", t.line, t.col)
            if t.kind == "op" and t.text == "{":
                depth += 1
            elif t.kind == "op" and t.text == "}":
                depth -= 1

    def parse_header(self):
        self.expect("fn")
        name = self.expect_name()
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                p = self.expect_name()
                self.expect(":")
                params.append((p, self.parse_type()))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        ret = None
        if self.at("->"):
            self.advance()
            ret = self.parse_type()
        return name, params, ret

    def parse_type(self) -> str:
        if self.at("bool"):
            self.advance()
            return BOOL
        self.expect("int")
        if self.at("["):
            self.advance()
            self.expect("]")
            return ARRAY
        return INT

    def parse_function(self) -> Function:
        name, params, ret = self.parse_header()
        if ret == ARRAY:
            self.semantic("functions cannot return arrays", name)
        self.scopes = [{}]
        for p, ty in params:
            self.declare(p.text, ty, p)
        self.current_return = ret
        body = self.parse_block(new_scope=False)
        if ret is not None and not _always_returns(body):
            self.semantic(f"function {name.text} may exit without returning a value", name)
        self.scopes = []
        return Function(name.text, tuple((p.text, ty) for p, ty in params), ret, body)

    def parse_block(self, new_scope: bool = True):
        self.expect("{")
        if new_scope:
            self.scopes.append({})
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                t = self.tok
                raise MiniSyntaxError("expected '}', found end of input", t.line, t.col)
            stmts.append(self.parse_statement())
        self.advance()
        if new_scope:
            self.scopes.pop()
        return tuple(stmts)

    # -- statements ----------------------------------------------------------
    def next_index(self) -> int:
        i = self.counter
        self.counter += 1
        return i

    def parse_statement(self):
        t = self.tok
        if self.at("var"):
            idx = self.next_index()
            self.advance()
            name = self.expect_name()
            self.expect(":")
            ty = self.parse_type()
            self.expect("=")
            init = self.parse_expr()
            self.expect(";")
            self.require(init, ty, t)
            self.declare(name.text, ty, name)
            return VarDecl(name.text, ty, init, index=idx)
        if self.at("if"):
            return self.parse_if()
        if self.at("while"):
            idx = self.next_index()
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            self.require(cond, BOOL, t)
            body = self.parse_block()
            return While(cond, body, index=idx)
        if self.at("return"):
            idx = self.next_index()
            self.advance()
            value = None
            if not self.at(";"):
                value = self.parse_expr()
            self.expect(";")
            if self.current_return is None and value is not None:
                self.semantic("void function returns a value", t)
            if self.current_return is not None:
                if value is None:
                    self.semantic("missing return value", t)
                self.require(value, self.current_return, t)
            return Return(value, index=idx)
        if t.kind == "name":
            idx = self.next_index()
            if self.peek().kind == "op" and self.peek().text == "(":
                call = self.parse_primary()
                self.expect(";")
                return ExprStmt(call, index=idx)
            name = self.advance()
            ty = self.lookup(name.text, name)
            if self.at("["):
                if ty != ARRAY:
                    self.semantic(f"{name.text} is not an array", name)
                self.advance()
                offset = self.parse_expr()
                self.expect("]")
                self.expect("=")
                value = self.parse_expr()
                self.expect(";")
                self.require(offset, INT, t)
                self.require(value, INT, t)
                return Store(name.text, offset, value, index=idx)
            self.expect("=")
            value = self.parse_expr()
            self.expect(";")
            if ty == ARRAY:
                self.semantic("arrays cannot be reassigned", name)
            self.require(value, ty, t)
            return Assign(name.text, value, index=idx)
        raise MiniSyntaxError(f"unexpected token {t.text or 'end of input'!r}", t.line, t.col)

    def parse_if(self):
        t = self.tok
        idx = self.next_index()
        self.expect("if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        self.require(cond, BOOL, t)
        then = self.parse_block()
        orelse = ()
        if self.at("else"):
            self.advance()
            if self.at("if"):
                orelse = (self.parse_if(),)
            else:
                orelse = self.parse_block()
        return If(cond, then, orelse, index=idx)

    def require(self, expr, ty: str, tok: Token):
        if expr.ty != ty:
            self.semantic(f"type mismatch: expected {ty}, found {expr.ty or 'void'}", tok)

    # -- expressions ---------------------------------------------------------
    def parse_expr(self, level: int = 0):
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        left = self.parse_expr(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            t = self.advance()
            right = self.parse_expr(level + 1)
            left = self.make_binary(t, left, right)
        return left

    def make_binary(self, t: Token, left, right):
        op = t.text
        if op in ARITH_OPS:
            self.require(left, INT, t)
            self.require(right, INT, t)
            return Binary(op, left, right, INT)
        if op in LOGIC_OPS:
            self.require(left, BOOL, t)
            self.require(right, BOOL, t)
            return Binary(op, left, right, BOOL)
        if op in ("==", "!="):
            if left.ty != right.ty or left.ty not in (INT, BOOL):
                self.semantic(f"cannot compare {left.ty} with {right.ty}", t)
            return Binary(op, left, right, BOOL)
        assert op in REL_OPS
        self.require(left, INT, t)
        self.require(right, INT, t)
        return Binary(op, left, right, BOOL)

    def parse_unary(self):
        t = self.tok
        if self.at("-"):
            self.advance()
            nxt = self.tok
            if nxt.kind == "num":
                self.advance()
                value = int(nxt.text)
                if value > INT_MAX + 1:
                    self.semantic("integer literal out of range", nxt)
                return IntLit(-value)
            operand = self.parse_unary()
            self.require(operand, INT, t)
            return Unary("-", operand, INT)
        if self.at("!"):
            self.advance()
            operand = self.parse_unary()
            self.require(operand, BOOL, t)
            return Unary("!", operand, BOOL)
        return self.parse_primary()

    def parse_primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            value = int(t.text)
            if value > INT_MAX:
                self.semantic("integer literal out of range", t)
            return IntLit(value)
        if self.at("true") or self.at("false"):
            self.advance()
            return BoolLit(t.text == "true")
        if self.at("("):
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if self.at("len"):
            self.advance()
            self.expect("(")
            name = self.expect_name()
            self.expect(")")
            if self.lookup(name.text, name) != ARRAY:
                self.semantic(f"{name.text} is not an array", name)
            return Len(name.text)
        if self.at("new"):
            self.advance()
            self.expect("int")
            self.expect("[")
            size = self.parse_expr()
            self.expect("]")
            self.require(size, INT, t)
            return NewArray(size)
        if t.kind == "name":
            self.advance()
            if self.at("("):
                return self.parse_call(t)
            ty = self.lookup(t.text, t)
            if self.at("["):
                if ty != ARRAY:
                    self.semantic(f"{t.text} is not an array", t)
                self.advance()
                offset = self.parse_expr()
                self.expect("]")
                self.require(offset, INT, t)
                return Index(t.text, offset)
            return Var(t.text, ty)
        raise MiniSyntaxError(f"unexpected token {t.text or 'end of input'!r}", t.line, t.col)

    def parse_call(self, name: Token):
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        if name.text not in self.signatures:
            self.semantic(f"unknown function {name.text}", name)
        ptypes, ret = self.signatures[name.text]
        if len(ptypes) != len(args):
            self.semantic(f"{name.text} expects {len(ptypes)} arguments", name)
        for a, ty in zip(args, ptypes):
            if ty == ARRAY:
                self.semantic("arrays cannot be passed to calls", name)
            self.require(a, ty, name)
        return Call(name.text, tuple(args), ret or "")


def _always_returns(block) -> bool:
    for stmt in block:
        if isinstance(stmt, Return):
            return True
        if isinstance(stmt, If) and stmt.orelse and \
                _always_returns(stmt.then) and _always_returns(stmt.orelse):
            return True
    return False


def parse(source: str) -> Program:
    """Parse and type-check ``source``; raises MiniSyntaxError / MiniSemanticError."""
    return Parser(source).parse_program()
