"""Mutation-based filtering of weak assertions and AIM labelling.

An assertion kills a mutant when it is falsified on at least one ok-status
execution of that mutant.  Crashes and step-limit runs never count as
assertion kills; they only show up in the test kill matrix.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence

import numpy as np

from .minilang.interp import DEFAULT_STEP_LIMIT, OK, ExecutionRecord
from .mutagen import Mutant, run_mutants
from .specgen import Assertion


@dataclass
class AssertionKillMatrix:
    assertions: List[Assertion]
    mutant_ids: List[int]
    cells: np.ndarray  # bool, shape (len(assertions), len(mutant_ids))

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=bool).reshape(
            len(self.assertions), len(self.mutant_ids))

    def column(self, mutant_id: int) -> int:
        try:
            return self._col[mutant_id]
        except AttributeError:
            self._col = {m: j for j, m in enumerate(self.mutant_ids)}
            return self.column(mutant_id)

    def to_rows(self) -> List[dict]:
        ids = np.asarray(self.mutant_ids)
        return [{"assertion_text": a.text,
                 "killed_mutant_ids": [int(m) for m in ids[self.cells[i]]]}
                for i, a in enumerate(self.assertions)]

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.to_rows():
                fh.write(json.dumps(row) + "\n")

    @classmethod
    def read_jsonl(cls, path, mutant_ids: Sequence[int]) -> "AssertionKillMatrix":
        from .specgen import parse_assertion
        with open(path, encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
        col = {m: j for j, m in enumerate(mutant_ids)}
        cells = np.zeros((len(rows), len(mutant_ids)), dtype=bool)
        for i, row in enumerate(rows):
            for m in row["killed_mutant_ids"]:
                cells[i, col[m]] = True
        return cls([parse_assertion(r["assertion_text"]) for r in rows],
                   list(mutant_ids), cells)


@dataclass
class InferenceResult:
    inferred: List[Assertion]
    weak: List[Assertion]
    aim_set: FrozenSet[int]
    per_mutant_kills: Dict[int, int]


def _record_key(rec: ExecutionRecord):
    return (tuple(sorted(rec.pre_state.items())), rec.observable())


def build_assertion_kill_matrix(valid: Sequence[Assertion], mutants: Sequence[Mutant],
                                tests, step_limit: int = DEFAULT_STEP_LIMIT,
                                records: Optional[List[List[ExecutionRecord]]] = None,
                                ) -> AssertionKillMatrix:
    """Falsification matrix of ``valid`` assertions against every mutant.

    ``records`` may carry precomputed mutant executions (mutant x test).
    Identical records are evaluated once.
    """
    if records is None:
        records = run_mutants(mutants, tests, step_limit)
    cells = np.zeros((len(valid), len(mutants)), dtype=bool)
    cache: Dict[tuple, np.ndarray] = {}
    for j, recs in enumerate(records):
        for rec in recs:
            if rec.status != OK:
                continue
            key = _record_key(rec)
            falsified = cache.get(key)
            if falsified is None:
                pre, post, res = rec.pre_state, rec.post_state, rec.result
                falsified = np.fromiter((not a.check(pre, post, res) for a in valid),
                                        dtype=bool, count=len(valid))
                cache[key] = falsified
            cells[:, j] |= falsified
    return AssertionKillMatrix(list(valid), [m.id for m in mutants], cells)


def infer(matrix: AssertionKillMatrix) -> InferenceResult:
    killing = matrix.cells.any(axis=1)
    killed = matrix.cells.any(axis=0)
    counts = matrix.cells.sum(axis=0)
    return InferenceResult(
        inferred=[a for a, k in zip(matrix.assertions, killing) if k],
        weak=[a for a, k in zip(matrix.assertions, killing) if not k],
        aim_set=frozenset(m for m, k in zip(matrix.mutant_ids, killed) if k),
        per_mutant_kills={m: int(c) for m, c in zip(matrix.mutant_ids, counts)},
    )


def _columns(matrix: AssertionKillMatrix, subset: Iterable[int]) -> List[int]:
    cols = []
    for m in subset:
        try:
            cols.append(matrix.column(m))
        except KeyError:
            raise KeyError(f"unknown mutant id {m}") from None
    return sorted(cols)


def infer_with_subset(matrix: AssertionKillMatrix, subset: Iterable[int]) -> List[Assertion]:
    """Assertions inferred when only the mutants in ``subset`` are analysed."""
    cols = _columns(matrix, subset)
    if not cols:
        return []
    killing = matrix.cells[:, cols].any(axis=1)
    return [a for a, k in zip(matrix.assertions, killing) if k]


def minimal_cover(matrix: AssertionKillMatrix) -> FrozenSet[int]:
    """Greedy set cover of the inferred assertions (ties go to the lower id)."""
    cells = matrix.cells
    uncovered = cells.any(axis=1)
    order = np.argsort(np.asarray(matrix.mutant_ids), kind="stable")
    chosen = []
    while uncovered.any():
        gains = cells[uncovered].sum(axis=0)[order]
        best = int(order[int(np.argmax(gains))])
        chosen.append(matrix.mutant_ids[best])
        uncovered &= ~cells[:, best]
    return frozenset(chosen)


def write_labels(matrix: AssertionKillMatrix, path) -> None:
    aims = infer(matrix).aim_set
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mutant_id", "is_aim"])
        for m in matrix.mutant_ids:
            w.writerow([m, int(m in aims)])


def read_labels(path) -> Dict[int, bool]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {int(r["mutant_id"]): r["is_aim"] == "1" for r in csv.DictReader(fh)}
