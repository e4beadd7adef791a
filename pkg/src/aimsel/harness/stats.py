"""Wilcoxon signed-rank test with an exact null for small samples."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

EXACT_MAX_N = 12


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float      # min(W+, W-)
    p_value: float        # two-sided
    n: int                # non-zero differences
    w_plus: float
    w_minus: float
    method: str           # "exact" or "normal"


def _average_ranks(values: List[float]) -> List[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _exact_tails(ranks: List[float], w_plus: float) -> Tuple[float, float]:
    """P(W+ <= w) and P(W+ >= w) over all 2^n equally likely sign patterns."""
    # ranks are multiples of 1/2, so work with doubled integers
    dist = Counter({0: 1})
    for r in ranks:
        step = int(round(2 * r))
        nxt = Counter()
        for s, c in dist.items():
            nxt[s] += c
            nxt[s + step] += c
        dist = nxt
    w = int(round(2 * w_plus))
    total = 2 ** len(ranks)
    lower = sum(c for s, c in dist.items() if s <= w)
    upper = sum(c for s, c in dist.items() if s >= w)
    return lower / total, upper / total


def wilcoxon_signed_rank(pairs: Iterable[Tuple[float, float]],
                         exact: Optional[bool] = None) -> WilcoxonResult:
    """Two-sided test of ``x - y`` symmetric about zero.

    ``exact=None`` enumerates the null distribution for up to 12 non-zero
    differences and uses the tie-corrected normal approximation beyond;
    ``True``/``False`` force either method.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("wilcoxon_signed_rank needs at least one pair")
    diffs = [x - y for x, y in pairs if x != y]
    n = len(diffs)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, 0.0, 0.0, "exact")
    ranks = _average_ranks([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    if (n <= EXACT_MAX_N) if exact is None else exact:
        lower, upper = _exact_tails(ranks, w_plus)
        p = min(1.0, 2 * min(lower, upper))
        method = "exact"
    else:
        mean = n * (n + 1) / 4
        ties = Counter(abs(d) for d in diffs).values()
        var = n * (n + 1) * (2 * n + 1) / 24 - sum(t ** 3 - t for t in ties) / 48
        z = (w_plus - mean) / math.sqrt(var) if var > 0 else 0.0
        p = min(1.0, math.erfc(abs(z) / math.sqrt(2)))
        method = "normal"
    return WilcoxonResult(min(w_plus, w_minus), p, n, w_plus, w_minus, method)
