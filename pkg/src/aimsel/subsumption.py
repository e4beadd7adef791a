"""Test kill matrix and the mutant subsumption hierarchy.

A test kills a mutant when the (status, result, post-state) triple of the
mutant's run differs from the original's.  ``m1`` subsumes ``m2`` when every
test killing ``m1`` also kills ``m2``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .minilang.interp import DEFAULT_STEP_LIMIT, ExecutionRecord, run_suite
from .mutagen import Mutant, run_mutants


@dataclass
class TestKillMatrix:
    __test__ = False  # not a pytest class

    n_tests: int
    mutant_ids: List[int]
    cells: np.ndarray  # bool, shape (n_tests, len(mutant_ids))

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=bool).reshape(
            self.n_tests, len(self.mutant_ids))
        self._col = {m: j for j, m in enumerate(self.mutant_ids)}

    def killset(self, mutant_id: int) -> FrozenSet[int]:
        try:
            col = self._col[mutant_id]
        except KeyError:
            raise KeyError(f"unknown mutant id {mutant_id}") from None
        return frozenset(np.flatnonzero(self.cells[:, col]).tolist())

    def write_jsonl(self, path) -> None:
        ids = np.asarray(self.mutant_ids)
        with open(path, "w", encoding="utf-8") as fh:
            for t in range(self.n_tests):
                fh.write(json.dumps({"test_index": t, "killed_mutant_ids":
                                     [int(m) for m in ids[self.cells[t]]]}) + "\n")

    @classmethod
    def read_jsonl(cls, path, mutant_ids: Sequence[int]) -> "TestKillMatrix":
        with open(path, encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
        col = {m: j for j, m in enumerate(mutant_ids)}
        cells = np.zeros((len(rows), len(mutant_ids)), dtype=bool)
        for row in rows:
            for m in row["killed_mutant_ids"]:
                cells[row["test_index"], col[m]] = True
        return cls(len(rows), list(mutant_ids), cells)


def build_test_kill_matrix(program, mutants: Sequence[Mutant], tests,
                           step_limit: int = DEFAULT_STEP_LIMIT,
                           records: Optional[List[List[ExecutionRecord]]] = None,
                           original: Optional[List[ExecutionRecord]] = None) -> TestKillMatrix:
    if original is None:
        original = run_suite(program, tests, step_limit)
    if records is None:
        records = run_mutants(mutants, tests, step_limit)
    base = [r.observable() for r in original]
    cells = np.zeros((len(tests), len(mutants)), dtype=bool)
    for j, recs in enumerate(records):
        for t, rec in enumerate(recs):
            cells[t, j] = rec.observable() != base[t]
    return TestKillMatrix(len(tests), [m.id for m in mutants], cells)


class NotKillable(ValueError):
    pass


def subsumes(m1: int, m2: int, matrix: TestKillMatrix) -> bool:
    k1 = matrix.killset(m1)
    k2 = matrix.killset(m2)
    if not k1:
        raise NotKillable(f"mutant {m1} is never killed; subsumption is undefined")
    return k1 <= k2


@dataclass
class SubsumptionGraph:
    nodes: List[Tuple[int, ...]]          # members, sorted; nodes ordered by first member
    killsets: List[FrozenSet[int]]
    edges: List[Tuple[int, int]]          # (source node, target node), transitively reduced
    equivalent: Tuple[int, ...] = ()

    def parents(self) -> Dict[int, List[int]]:
        out: Dict[int, List[int]] = {i: [] for i in range(len(self.nodes))}
        for a, b in self.edges:
            out[b].append(a)
        return out

    def to_json(self) -> dict:
        return {"nodes": [{"id": i, "members": list(ms), "killset": sorted(ks)}
                          for i, (ms, ks) in enumerate(zip(self.nodes, self.killsets))],
                "edges": [list(e) for e in self.edges],
                "equivalent": list(self.equivalent)}

    def to_dot(self, highlight: FrozenSet[int] = frozenset()) -> str:
        lines = ["digraph subsumption {", "  node [shape=box];"]
        for i, ms in enumerate(self.nodes):
            label = ", ".join(map(str, ms))
            style = ' style=filled fillcolor="#b9f6ca"' if highlight & set(ms) else ""
            lines.append(f'  n{i} [label="{label}"{style}];')
        for a, b in self.edges:
            lines.append(f"  n{a} -> n{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def subsumption_graph(matrix: TestKillMatrix) -> SubsumptionGraph:
    """Group mutually subsuming mutants and link strict killset inclusions."""
    groups: Dict[FrozenSet[int], List[int]] = {}
    equivalent = []
    for m in matrix.mutant_ids:
        ks = matrix.killset(m)
        if ks:
            groups.setdefault(ks, []).append(m)
        else:
            equivalent.append(m)
    ordered = sorted(groups.items(), key=lambda kv: min(kv[1]))
    nodes = [tuple(sorted(ms)) for _, ms in ordered]
    killsets = [ks for ks, _ in ordered]
    n = len(nodes)
    below = [[j for j in range(n) if j != i and killsets[i] < killsets[j]] for i in range(n)]
    edges = []
    for i in range(n):
        succ = set(below[i])
        # drop j when some other successor k already reaches it
        for j in below[i]:
            if not any(killsets[k] < killsets[j] for k in succ if k != j):
                edges.append((i, j))
    return SubsumptionGraph(nodes, killsets, sorted(edges), tuple(sorted(equivalent)))


def subsuming_mutants(graph: SubsumptionGraph) -> FrozenSet[int]:
    """Members of every node that no other node strictly subsumes."""
    has_parent = {b for _, b in graph.edges}
    return frozenset(m for i, ms in enumerate(graph.nodes) if i not in has_parent for m in ms)
