"""Mutant selection strategies and their cost/benefit accounting."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional

import numpy as np

from ..minilang import run_suite
from ..mutagen import run_mutants
from ..mutfilter import build_assertion_kill_matrix, infer, infer_with_subset, minimal_cover
from .pipeline import SubjectArtifacts

STRATEGIES = ("all", "subsuming", "aims", "random", "minimal-cover")


def select(strategy: str, art: SubjectArtifacts, n: Optional[int] = None,
           seed: Optional[int] = None, predicted: Optional[Iterable[int]] = None
           ) -> FrozenSet[int]:
    """Mutant ids chosen by ``strategy``.

    ``aims`` takes the ids a trained selector predicted positive (see
    ``xval.XValResult.predicted`` or ``SelectorModel.predict``).
    """
    ids = list(art.mutant_ids)
    if strategy == "all":
        return frozenset(ids)
    if strategy == "subsuming":
        return art.subsuming
    if strategy == "aims":
        if predicted is None:
            raise ValueError("strategy 'aims' needs predictions from a trained model")
        chosen = frozenset(predicted)
        unknown = chosen - set(ids)
        if unknown:
            raise KeyError(f"unknown mutant ids {sorted(unknown)}")
        return chosen
    if strategy == "random":
        if n is None or seed is None:
            raise ValueError("strategy 'random' needs n and seed")
        if not 0 <= n <= len(ids):
            raise ValueError(f"cannot sample {n} of {len(ids)} mutants")
        rng = np.random.default_rng(seed)
        return frozenset(int(ids[i]) for i in rng.choice(len(ids), size=n, replace=False))
    if strategy == "minimal-cover":
        return minimal_cover(art.amatrix)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


@dataclass
class SelectionReport:
    strategy: str
    subject: str
    selected: FrozenSet[int]
    n_inferred_all: int
    n_inferred_subset: int
    executions: int
    wall_clock_seconds: Optional[float] = None
    per_subject: List["SelectionReport"] = field(default_factory=list)

    @property
    def inferred_fraction(self) -> float:
        # nothing to infer means nothing can be missed
        if self.n_inferred_all == 0:
            return 1.0
        return self.n_inferred_subset / self.n_inferred_all

    @property
    def missed_fraction(self) -> float:
        return 1.0 - self.inferred_fraction

    def row(self) -> Dict[str, object]:
        return {"subject": self.subject, "strategy": self.strategy,
                "selected": len(self.selected), "inferred_all": self.n_inferred_all,
                "inferred_subset": self.n_inferred_subset,
                "inferred_fraction": round(self.inferred_fraction, 6),
                "executions": self.executions,
                "wall_clock_seconds": ("" if self.wall_clock_seconds is None
                                       else round(self.wall_clock_seconds, 4))}


def evaluate_selection(art: SubjectArtifacts, subset: Iterable[int], strategy: str = "custom",
                       measure: bool = False) -> SelectionReport:
    """Benefit (assertions still inferred) and cost of analysing ``subset``.

    The fraction comes from the persisted kill matrix.  With ``measure`` and
    an in-memory subject, the filtering stage is re-run on the subset to time it.
    """
    subset = frozenset(subset)
    unknown = subset - set(art.mutant_ids)
    if unknown:
        raise KeyError(f"unknown mutant ids {sorted(unknown)}")
    n_all = len(infer(art.amatrix).inferred)
    n_sub = len(infer_with_subset(art.amatrix, subset))
    seconds = None
    if measure:
        seconds = time_filtering(art, subset)
    return SelectionReport(strategy, art.name, subset, n_all, n_sub,
                           len(subset) * art.n_tests, seconds)


def time_filtering(art: SubjectArtifacts, subset: Iterable[int]) -> float:
    """Wall-clock of executing and filtering against the chosen mutants."""
    if art.subject is None or not art.mutants:
        raise ValueError("timing needs the in-memory subject and mutants")
    chosen = set(subset)
    mutants = [m for m in art.mutants if m.id in chosen]
    tests = art.subject.tests
    start = time.perf_counter()
    records = run_mutants(mutants, tests, art.extra.get("step_limit", 100_000))
    build_assertion_kill_matrix(art.amatrix.assertions, mutants, tests, records=records)
    return time.perf_counter() - start


def lower_median_index(values: List[float]) -> int:
    """Index (into ``values``) of the lower median."""
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    return order[(len(values) - 1) // 2]


def random_seeds(master_seed: int, repeats: int) -> List[int]:
    ss = np.random.SeedSequence(master_seed)
    return [int(c.generate_state(1)[0]) for c in ss.spawn(repeats)]


def random_baseline(art: SubjectArtifacts, n: int, repeats: int, master_seed: int
                    ) -> SelectionReport:
    """The lower-median report over ``repeats`` random draws of size ``n``."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    reports = [evaluate_selection(art, select("random", art, n=n, seed=s), "random")
               for s in random_seeds(master_seed, repeats)]
    return reports[lower_median_index([r.inferred_fraction for r in reports])]


def aggregate(reports: List[SelectionReport], strategy: str) -> SelectionReport:
    """Corpus-level totals of per-subject reports of one strategy."""
    return SelectionReport(
        strategy, "ALL", frozenset((r.subject, m) for r in reports for m in r.selected),
        sum(r.n_inferred_all for r in reports), sum(r.n_inferred_subset for r in reports),
        sum(r.executions for r in reports),
        None if any(r.wall_clock_seconds is None for r in reports)
        else sum(r.wall_clock_seconds for r in reports),
        per_subject=list(reports))
