import pytest
from hypothesis import given, settings, strategies as st

from aimsel.minilang import OK, STEP_LIMIT, ExecutionRecord, parse, run_suite
from aimsel.specgen import (
    Assertion, UnboundSymbol, Verdict, evaluate_assertion, extract_grammar,
    fuzz_assertions, parse_assertion, read_catalog, render, validate,
    validation_report, write_catalog,
)
from conftest import CORPUS, load_tests

ADD = parse("fn add(a:int,b:int)->int{return a+b;}")
ADD_GRAMMAR = extract_grammar(ADD, "add")
TARGET = parse_assertion("result == old(a) + old(b)")


def rec(a, b, result, status=OK):
    return ExecutionRecord({"a": a, "b": b}, {"a": a, "b": b}, result, status)


# -- independent recognizer for the candidate language -----------------------

def is_term(e, g):
    return e in g.int_terms


def is_int_expr(e, g, budget):
    if is_term(e, g):
        return True
    return (budget >= 1 and e[0] == "arith" and e[1] in g.arith_ops
            and is_term(e[2], g) and is_term(e[3], g))


def derivable(e, g, budget):
    """Membership in the depth-bounded language, written from the grammar text."""
    if budget < 1:
        return False
    if e[0] == "bvar":
        return e[1] in g.bool_terms
    if e[0] == "rel":
        return e[1] in g.rel_ops and all(is_int_expr(x, g, budget - 1) for x in e[2:])
    if e[0] == "not":
        return budget >= 2 and derivable(e[1], g, budget - 1)
    if e[0] == "conn":
        return (budget >= 2 and e[1] in g.connectives
                and derivable(e[2], g, budget - 1) and derivable(e[3], g, budget - 1))
    return False


# -- grammar -----------------------------------------------------------------

def test_add_grammar_terms():
    terms = {render(t) for t in ADD_GRAMMAR.int_terms}
    assert {"old(a)", "old(b)", "result", "0", "1", "-1"} <= terms
    assert ADD_GRAMMAR.bool_terms == ()


def test_bool_param_terms():
    g = extract_grammar(parse("fn f(p: bool) { p = !p; }"), "f")
    assert {render(t) for t in g.bool_terms} == {"p", "old(p)"}


def test_grammar_mentions_exactly_scope():
    prog = parse(CORPUS.joinpath("swap_elems.mini").read_text())
    g = extract_grammar(prog, "swap_elems")
    names = {t[1] if t[0] in ("old", "var", "len") else None for t in g.int_terms}
    names |= {t[1][1] for t in g.int_terms if t[0] == "elem"}
    # parameters only: "changed" is declared after a return statement
    assert names - {None} == {"a", "i", "j"}


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.mini"))[:6], ids=lambda p: p.stem)
def test_grammar_text_is_stable(path):
    a = extract_grammar(parse(path.read_text()), path.stem).to_text()
    b = extract_grammar(parse(path.read_text()), path.stem).to_text()
    assert a == b and "int_term :=" in a


# -- fuzzing -----------------------------------------------------------------

def test_fuzz_deterministic_and_distinct():
    a = fuzz_assertions(ADD_GRAMMAR, 300, seed=3)
    b = fuzz_assertions(ADD_GRAMMAR, 300, seed=3)
    assert [x.text for x in a] == [x.text for x in b]
    assert len({x.text for x in a}) == len(a) <= 300
    assert [x.text for x in fuzz_assertions(ADD_GRAMMAR, 300, seed=4)] != [x.text for x in a]


def test_fuzz_single_depth_one_atom():
    g = extract_grammar(ADD, "add", max_depth=1)
    [a] = fuzz_assertions(g, 1, seed=0)
    assert a.expr[0] == "rel" and a.depth == 1


def test_fuzz_drops_syntactic_tautologies():
    for a in fuzz_assertions(ADD_GRAMMAR, 2000, seed=1):
        e = a.expr
        if e[0] in ("rel", "conn"):
            assert e[2] != e[3]
        if e[0] == "rel":
            assert not (e[2][0] == "const" and e[3][0] == "const")


def test_fuzz_finds_sum_postcondition():
    # the sample must lie in the depth-3 language, and at this budget the
    # exact postcondition of add is among the candidates
    cands = fuzz_assertions(ADD_GRAMMAR, 50_000, seed=0)
    assert all(derivable(a.expr, ADD_GRAMMAR, 3) for a in cands)
    assert TARGET.depth <= 3
    assert TARGET.text in {a.text for a in cands}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_fuzzed_candidates_are_in_language_and_round_trip(seed):
    prog = parse(CORPUS.joinpath("queue_enqueue.mini").read_text())
    g = extract_grammar(prog, "queue_enqueue")
    for a in fuzz_assertions(g, 200, seed):
        assert derivable(a.expr, g, g.max_depth)
        assert parse_assertion(a.text).expr == a.expr


# -- evaluation and validation ---------------------------------------------------

def test_evaluate_examples():
    assert evaluate_assertion(TARGET, rec(2, 3, 5)) is Verdict.HOLDS
    assert evaluate_assertion(TARGET, rec(2, 3, -1)) is Verdict.FALSIFIED
    assert evaluate_assertion(TARGET, rec(2, 3, None, STEP_LIMIT)) is Verdict.INAPPLICABLE


def test_unbound_symbol_is_an_error():
    with pytest.raises(UnboundSymbol):
        evaluate_assertion(parse_assertion("c == 1"), rec(1, 2, 3))


def test_out_of_bounds_element_does_not_hold():
    a = parse_assertion("xs[old(k)] == 0")
    r = ExecutionRecord({"k": 5, "xs": (0,)}, {"k": 5, "xs": (0,)}, 0, OK)
    assert evaluate_assertion(a, r) is Verdict.FALSIFIED


def test_validate_examples():
    records = run_suite(ADD, load_tests("add", CORPUS.parent / "demo"), 1000)
    taut = parse_assertion("old(a) >= old(b) || old(a) <= old(b)")
    wrong = parse_assertion("result == 0")
    kept = validate([taut, wrong, TARGET], records)
    assert kept == [taut, TARGET]
    assert validate(kept, records) == kept
    rows = validation_report([wrong], records)
    assert rows[0]["valid"] is False and rows[0]["n_holds"] < len(records)


@pytest.mark.parametrize("name", ["stack_push", "binary_search", "dedup_sorted"])
def test_validation_soundness_brute_force(name):
    prog = parse(CORPUS.joinpath(f"{name}.mini").read_text())
    records = run_suite(prog, load_tests(name), 100_000)
    cands = fuzz_assertions(extract_grammar(prog, name), 500, seed=0)
    valid = validate(cands, records)
    for a in cands:
        holds_everywhere = all(r.status != OK or a.check(r.pre_state, r.post_state, r.result)
                               for r in records)
        assert (a in valid) == holds_everywhere


def test_catalog_round_trip(tmp_path):
    cands = fuzz_assertions(ADD_GRAMMAR, 100, seed=0)
    write_catalog(cands, tmp_path / "c.jsonl")
    assert [a.text for a in read_catalog(tmp_path / "c.jsonl")] == [a.text for a in cands]


def test_assertion_pickles():
    import pickle
    a = pickle.loads(pickle.dumps(TARGET))
    assert a == TARGET and a.check({"a": 1, "b": 2}, {}, 3)


def test_text_is_canonical():
    assert Assertion(("rel", "==", ("result",), ("const", 0))).text == "result == 0"
