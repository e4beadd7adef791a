"""Strategy comparison over a corpus: the data behind ``bench``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

from .config import ExperimentConfig
from .selection import (
    SelectionReport, aggregate, evaluate_selection, lower_median_index, random_baseline,
    select,
)
from .stats import WilcoxonResult, wilcoxon_signed_rank
from .xval import XValResult, cross_validate

BENCH_STRATEGIES = ("all", "subsuming", "aims", "random", "minimal-cover")


def lower_median(values: List[float]) -> float:
    return values[lower_median_index(values)]


@dataclass
class BenchResult:
    reports: Dict[str, List[SelectionReport]]   # strategy -> per-subject reports
    xval: XValResult
    wilcoxon: Optional[WilcoxonResult]

    def totals(self, strategy: str) -> SelectionReport:
        return aggregate(self.reports[strategy], strategy)

    def median_fraction(self, strategy: str) -> float:
        return lower_median([r.inferred_fraction for r in self.reports[strategy]])

    def cost_ratio(self, strategy: str = "aims") -> float:
        sub = self.totals(strategy).executions
        return float("inf") if sub == 0 else self.totals("all").executions / sub

    def rows(self) -> List[dict]:
        return [r.row() for s in BENCH_STRATEGIES for r in self.reports[s]]

    def summary_rows(self) -> List[dict]:
        out = []
        for s in BENCH_STRATEGIES:
            t = self.totals(s)
            out.append({"strategy": s, "selected": len(t.selected),
                        "executions": t.executions,
                        "median_inferred_fraction": round(self.median_fraction(s), 4),
                        "pooled_inferred_fraction": round(t.inferred_fraction, 4)})
        return out


def benchmark(arts, config: ExperimentConfig, xval: Optional[XValResult] = None,
              measure: bool = False) -> BenchResult:
    """Evaluate every strategy on every subject.

    The ``aims`` selection for a subject comes from the cross-validation fold
    in which that subject was held out, and ``random`` draws the same number
    of mutants.
    """
    xval = xval or cross_validate(arts, config)
    reports: Dict[str, List[SelectionReport]] = {s: [] for s in BENCH_STRATEGIES}
    for art in arts:
        predicted = xval.predicted(art.name)
        for s in ("all", "subsuming", "aims", "minimal-cover"):
            chosen = select(s, art, predicted=predicted if s == "aims" else None)
            reports[s].append(evaluate_selection(art, chosen, s, measure=measure))
        reports["random"].append(random_baseline(art, len(predicted), config.random_repeats,
                                                 config.master_seed))
    pairs = [(a.inferred_fraction, r.inferred_fraction)
             for a, r in zip(reports["aims"], reports["random"])]
    wil = wilcoxon_signed_rank(pairs, exact=True) if pairs else None
    return BenchResult(reports, xval, wil)
