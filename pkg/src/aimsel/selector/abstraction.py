"""Identifier and literal abstraction of mini-language source.

User-defined names and literals become typed placeholders ``<TYPE>_<n>``
numbered by first appearance; keywords, built-in types and punctuation pass
through.  The token stream is the canonical printing, so token positions line
up with statement spans recorded on mutants.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from ..minilang.parser import MiniSemanticError, parse, tokenize
from ..minilang.printer import print_tokens

ID_TYPES = ("METHOD", "VAR", "TYPE", "INT", "STRING")
_ID_SHAPE = re.compile(r"(METHOD|VAR|TYPE|INT|STRING)_(\d+)")


@dataclass
class AbstractionMap:
    forward: Dict[Tuple[str, str], str] = field(default_factory=dict)
    backward: Dict[str, str] = field(default_factory=dict)
    counters: Dict[str, int] = field(default_factory=lambda: {t: 0 for t in ID_TYPES})

    def lookup(self, kind: str, original: str) -> str:
        key = (kind, original)
        abstract = self.forward.get(key)
        if abstract is None:
            self.counters[kind] += 1
            abstract = f"{kind}_{self.counters[kind]}"
            self.forward[key] = abstract
            self.backward[abstract] = original
        return abstract

    def restore(self, abstracted: str) -> str:
        return " ".join(self.backward.get(t, t) for t in abstracted.split())


def _classify(tokens) -> List[Tuple[str, str]]:
    """(kind, text) pairs where kind is an ID type or '' for pass-through."""
    out = []
    for i, t in enumerate(tokens):
        if t.kind == "num":
            out.append(("INT", t.text))
        elif t.kind == "name":
            m = _ID_SHAPE.fullmatch(t.text)
            if m:
                out.append((m.group(1), t.text))
            elif (i > 0 and tokens[i - 1].text == "fn") or \
                    (i + 1 < len(tokens) and tokens[i + 1].text == "("):
                out.append(("METHOD", t.text))
            else:
                out.append(("VAR", t.text))
        else:
            out.append(("", t.text))
    return out


def _already_abstract(tokens) -> bool:
    return all(t.kind != "name" or _ID_SHAPE.fullmatch(t.text) for t in tokens)


def abstract_code(source: str) -> Tuple[str, AbstractionMap]:
    raw = [t for t in tokenize(source) if t.kind != "eof"]
    try:
        canonical = print_tokens(parse(source))[0]
        # re-lex the canonical stream so positions match mutant spans
        tokens = [t for t in tokenize(" ".join(canonical)) if t.kind != "eof"]
    except MiniSemanticError:
        # placeholders such as INT_1 are not declared names; accept text that
        # is already abstracted and otherwise propagate the error
        if not _already_abstract(raw):
            raise
        tokens = raw
    amap = AbstractionMap()
    words = [amap.lookup(kind, text) if kind else text for kind, text in _classify(tokens)]
    return " ".join(words), amap
