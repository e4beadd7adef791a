import dataclasses
import json
from collections import Counter

import pytest

from aimsel.minilang import parse, pretty_print
from aimsel.mutagen import (
    MutationOperator, generate_mutants, mutated_source, read_catalog, write_catalog,
)
from conftest import CORPUS

ADD = "fn add(a:int,b:int)->int{return a+b;}"
CORPUS_FILES = sorted(CORPUS.glob("*.mini"))


def node_diff(a, b) -> int:
    """Number of maximal differing subtrees between two ASTs (independent of mutagen)."""
    if a == b:
        return 0
    if type(a) is not type(b):
        return 1
    if dataclasses.is_dataclass(a):
        return sum(node_diff(getattr(a, f.name), getattr(b, f.name))
                   for f in dataclasses.fields(a) if f.compare)
    if isinstance(a, tuple) and len(a) == len(b):
        return sum(node_diff(x, y) for x, y in zip(a, b))
    return 1


def test_aor_only_on_add():
    ms = generate_mutants(parse(ADD), "add", ["AOR"])
    assert [(m.operator.from_token, m.operator.to_token) for m in ms] == \
        [("+", "-"), ("+", "*"), ("+", "/"), ("+", "%")]
    assert [m.id for m in ms] == [0, 1, 2, 3]


def test_empty_void_function_has_no_mutants():
    assert generate_mutants(parse("fn f(){}"), "f") == []


def test_mutated_source_examples():
    prog = parse(ADD)
    sub = generate_mutants(prog, "add", ["AOR"])[0]
    assert "return a - b ;" in mutated_source(prog, sub)
    src = "fn f(a:int)->int{ var x: int = a; x = x + 1; return x; }"
    prog = parse(src)
    [std] = generate_mutants(prog, "f", ["STD"])
    text = mutated_source(prog, std)
    assert "x = x + 1" not in text and "var x" in text
    assert (std.operator.from_token, std.operator.to_token) == ("assign", "")


def test_std_skips_declarations_returns_and_sole_return_paths():
    src = "fn f(a:int)->int{ var x: int = 0; if (a > 0) { return 1; } else { return 2; } }"
    ms = generate_mutants(parse(src), "f", ["STD"])
    assert ms == []  # deleting the if would leave no return


def test_ror_on_booleans_swaps_equality_only():
    src = "fn f(p:bool, q:bool)->bool{ return p == q; }"
    ms = generate_mutants(parse(src), "f", ["ROR"])
    assert [m.operator.to_token for m in ms] == ["!="]


def test_lvr_values():
    src = "fn f()->int{ return 5; }"
    ms = generate_mutants(parse(src), "f", ["LVR"])
    assert [m.operator.to_token for m in ms] == ["0", "1", "-1", "6", "4"]
    ms = generate_mutants(parse("fn f()->int{ return 0; }"), "f", ["LVR"])
    assert [m.operator.to_token for m in ms] == ["1", "-1"]
    ms = generate_mutants(parse("fn f()->bool{ return true; }"), "f", ["LVR"])
    assert [(m.operator.from_token, m.operator.to_token) for m in ms] == [("true", "false")]


def test_operator_validation():
    with pytest.raises(ValueError):
        MutationOperator("XYZ", "+", "-")
    with pytest.raises(ValueError):
        MutationOperator("AOR", "+", "+")
    with pytest.raises(ValueError):
        generate_mutants(parse(ADD), "add", ["BOGUS"])


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_first_order_and_compilable(path):
    prog = parse(path.read_text())
    fn = prog.function(path.stem)
    ms = generate_mutants(prog, path.stem)
    assert len(ms) >= 20
    for m in ms:
        # exactly one subtree differs, inside the function under test
        assert node_diff(fn, m.program.function(path.stem)) == 1
        others = [f for f in m.program.functions if f.name != path.stem]
        assert others == [f for f in prog.functions if f.name != path.stem]
        assert parse(mutated_source(prog, m)) == m.program


def test_catalog_is_stable(tmp_path):
    prog = parse(CORPUS.joinpath("binary_search.mini").read_text())
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_catalog(generate_mutants(prog, "binary_search"), a)
    write_catalog(generate_mutants(parse(pretty_print(prog)), "binary_search"), b)
    assert a.read_bytes() == b.read_bytes()
    rows = read_catalog(a)
    assert set(rows[0]) == {"id", "operator_tag", "from", "to", "statement_index", "node_path"}
    assert [r["id"] for r in rows] == list(range(len(rows)))


def test_every_operator_family_occurs_in_corpus():
    tags = Counter()
    for path in CORPUS_FILES:
        tags.update(m.operator.tag for m in generate_mutants(parse(path.read_text()), path.stem))
    assert set(tags) == {"AOR", "ROR", "COR", "ORU", "LVR", "STD"}


def test_order_is_statement_then_position():
    prog = parse(CORPUS.joinpath("clamp.mini").read_text())
    ms = generate_mutants(prog, "clamp")
    keys = [m.statement_index for m in ms]
    assert keys == sorted(keys)
    assert json.loads(json.dumps(ms[0].to_json())) == ms[0].to_json()
