"""The bundled imperative mini-language: parser, printer and evaluator."""
from .ast import ARRAY, BOOL, INT, Function, Program, exit_locals, walk_statements
from .interp import (
    DEFAULT_STEP_LIMIT, OK, RUNTIME_ERROR, STEP_LIMIT, ExecutionRecord, TestCase,
    execute, run_suite,
)
from .parser import MiniError, MiniSemanticError, MiniSyntaxError, parse, tokenize
from .printer import pretty_print, print_tokens

__all__ = [
    "ARRAY", "BOOL", "INT", "Function", "Program", "exit_locals", "walk_statements",
    "DEFAULT_STEP_LIMIT", "OK", "RUNTIME_ERROR", "STEP_LIMIT", "ExecutionRecord",
    "TestCase", "execute", "run_suite", "MiniError", "MiniSemanticError",
    "MiniSyntaxError", "parse", "tokenize", "pretty_print", "print_tokens",
]
