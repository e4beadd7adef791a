import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from aimsel.minilang import TestCase, execute, parse, run_suite
from aimsel.mutagen import generate_mutants
from aimsel.subsumption import (
    NotKillable, TestKillMatrix, build_test_kill_matrix, subsumes, subsuming_mutants,
    subsumption_graph,
)
from conftest import CORPUS, load_tests

ADD = parse("fn add(a:int,b:int)->int{return a+b;}")


def km(killsets, n_tests):
    """Matrix whose column j is killed by the tests in killsets[j]."""
    cells = np.zeros((n_tests, len(killsets)), dtype=bool)
    for j, ks in enumerate(killsets):
        for t in ks:
            cells[t, j] = True
    return TestKillMatrix(n_tests, list(range(len(killsets))), cells)


def test_add_subtraction_mutant_kills():
    sub = generate_mutants(ADD, "add", ["AOR"])[0]
    m = build_test_kill_matrix(ADD, [sub], [TestCase("add", (1, 2)), TestCase("add", (0, 0))])
    assert m.cells[:, 0].tolist() == [True, False]


@pytest.mark.parametrize("name", ["stack_pop", "fib", "sign_product"])
def test_matrix_equals_brute_force(name):
    prog = parse(CORPUS.joinpath(f"{name}.mini").read_text())
    tests = load_tests(name)
    mutants = generate_mutants(prog, name)
    m = build_test_kill_matrix(prog, mutants, tests, 100_000)
    for t, test in enumerate(tests):
        orig = execute(prog, test, 100_000)
        for j, mut in enumerate(mutants):
            r = execute(mut.program, test, 100_000)
            differs = (r.status, r.result, r.post_state) != (orig.status, orig.result, orig.post_state)
            assert m.cells[t, j] == differs


def test_subsumes_examples():
    m = km([{0}, {0, 1}, {1, 2}, {0}, set()], 3)
    assert subsumes(0, 1, m)
    assert not subsumes(2, 1, m)
    assert subsumes(0, 3, m) and subsumes(3, 0, m)
    with pytest.raises(NotKillable):
        subsumes(4, 0, m)
    with pytest.raises(KeyError):
        subsumes(0, 99, m)


def test_graph_small_example():
    g = subsumption_graph(km([{0}, {0}, {0, 1}], 2))
    assert g.nodes == [(0, 1), (2,)]
    assert g.edges == [(0, 1)]
    assert subsuming_mutants(g) == {0, 1}


def test_all_equivalent():
    g = subsumption_graph(km([set(), set()], 3))
    assert g.nodes == [] and g.edges == [] and g.equivalent == (0, 1)
    assert subsuming_mutants(g) == frozenset()


def test_chain_top():
    g = subsumption_graph(km([{0}, {0, 1}, {0, 1, 2}], 3))
    assert g.edges == [(0, 1), (1, 2)]
    assert subsuming_mutants(g) == {0}


def test_figure_style_subsumed_mutant_excluded():
    # mutant 5 is killed by a strict subset of the tests killing mutant 6
    ks = [set()] * 5 + [{1}, {1, 2}, {0, 3}]
    g = subsumption_graph(km(ks, 4))
    top = subsuming_mutants(g)
    assert 5 in top and 6 not in top and 7 in top


def reachability(n, edges):
    reach = {i: set() for i in range(n)}
    for a, b in edges:
        reach[a].add(b)
    changed = True
    while changed:
        changed = False
        for a in range(n):
            new = set().union(*(reach[b] for b in reach[a])) - reach[a]
            if new:
                reach[a] |= new
                changed = True
    return reach


def check_graph_against_pairwise(m):
    g = subsumption_graph(m)
    killable = [x for x in m.mutant_ids if m.killset(x)]
    node_of = {x: i for i, ms in enumerate(g.nodes) for x in ms}
    assert set(node_of) == set(killable)
    assert set(g.equivalent) == set(m.mutant_ids) - set(killable)
    # nodes are exactly the mutual-subsumption classes
    for a, b in itertools.combinations(killable, 2):
        mutual = subsumes(a, b, m) and subsumes(b, a, m)
        assert mutual == (node_of[a] == node_of[b])
    # reachability equals strict pairwise subsumption, and no edge is redundant
    reach = reachability(len(g.nodes), g.edges)
    for a in killable:
        for b in killable:
            strict = subsumes(a, b, m) and not subsumes(b, a, m)
            assert (node_of[b] in reach[node_of[a]]) == strict
    for a, b in g.edges:
        others = [e for e in g.edges if e != (a, b)]
        assert b not in reachability(len(g.nodes), others)[a]
    # tops = not strictly subsumed by anyone
    top = {x for x in killable
           if not any(subsumes(y, x, m) and not subsumes(x, y, m) for y in killable)}
    assert subsuming_mutants(g) == top
    return g


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 5).flatmap(lambda t: st.integers(1, 9).flatmap(
    lambda n: arrays(bool, (t, n)))))
def test_graph_matches_pairwise_oracle_random(cells):
    check_graph_against_pairwise(TestKillMatrix(cells.shape[0], list(range(cells.shape[1])), cells))


def test_tests_killing_tops_kill_everything():
    name = "insertion_sort"
    prog = parse(CORPUS.joinpath(f"{name}.mini").read_text())
    tests = load_tests(name)
    mutants = generate_mutants(prog, name)
    m = build_test_kill_matrix(prog, mutants, tests)
    g = check_graph_against_pairwise(m)
    top = subsuming_mutants(g)
    # greedily choose tests until every top mutant is killed, then replay
    chosen, remaining = set(), set(top)
    while remaining:
        t = max(range(len(tests)), key=lambda t: sum(m.cells[t, x] for x in remaining))
        chosen.add(t)
        remaining -= {x for x in remaining if m.cells[t, x]}
    original = run_suite(prog, [tests[t] for t in sorted(chosen)])
    for mut in mutants:
        if not m.killset(mut.id):
            continue
        recs = run_suite(mut.program, [tests[t] for t in sorted(chosen)])
        assert any(r.observable() != o.observable() for r, o in zip(recs, original))


def test_persistence_and_exports(tmp_path):
    m = km([{0}, {0, 1}, set()], 2)
    m.write_jsonl(tmp_path / "t.jsonl")
    back = TestKillMatrix.read_jsonl(tmp_path / "t.jsonl", m.mutant_ids)
    assert (back.cells == m.cells).all()
    g = subsumption_graph(m)
    assert g.to_json()["equivalent"] == [2]
    dot = g.to_dot(subsuming_mutants(g))
    assert dot.startswith("digraph") and "n0 -> n1" in dot
