"""Experiment configuration and its key = value file format.

Example file::

    # comments start with '#'
    master_seed = 7
    k_folds = 5
    operators = AOR, ROR, LVR
    embedding_dim = 64
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Tuple

from ..minilang.interp import DEFAULT_STEP_LIMIT
from ..mutagen import OPERATOR_TAGS
from ..selector.sequences import SelectorConfig
from ..specgen import DEFAULT_MAX_DEPTH

DEFAULT_FUZZ_N = 500


@dataclass(frozen=True)
class ExperimentConfig:
    k_folds: int = 5
    random_repeats: int = 10
    master_seed: int = 0
    step_limit: int = DEFAULT_STEP_LIMIT
    fuzz_n: int = DEFAULT_FUZZ_N
    max_depth: int = DEFAULT_MAX_DEPTH
    operators: Tuple[str, ...] = OPERATOR_TAGS
    selector: SelectorConfig = field(default_factory=SelectorConfig)

    def __post_init__(self):
        if self.k_folds < 2:
            raise ValueError("k_folds must be at least 2")
        if self.random_repeats < 1:
            raise ValueError("random_repeats must be at least 1")
        if self.step_limit < 1 or self.fuzz_n < 1:
            raise ValueError("step_limit and fuzz_n must be positive")
        bad = set(self.operators) - set(OPERATOR_TAGS)
        if bad:
            raise ValueError(f"unknown operator tags: {sorted(bad)}")

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, master_seed=seed,
                                   selector=dataclasses.replace(self.selector, seed=seed))


_TOP = {f.name for f in dataclasses.fields(ExperimentConfig)}
_SEL = {f.name for f in dataclasses.fields(SelectorConfig)}


def _convert(key: str, value: str, default):
    if key == "operators":
        return tuple(t.strip().upper() for t in value.split(",") if t.strip())
    if isinstance(default, float):
        return float(value)
    return int(value)


def parse_config(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Apply ``key = value`` lines on top of ``base`` (defaults if omitted).

    Selector keys (``max_len``, ``embedding_dim``, ...) may be written bare or
    with a ``selector.`` prefix.  ``seed`` sets both seeds.
    """
    cfg = base or ExperimentConfig()
    top, sel = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.removeprefix("selector.")
        try:
            if key == "seed":
                top["master_seed"] = sel["seed"] = int(value)
            elif key in _SEL:
                sel[key] = _convert(key, value, getattr(cfg.selector, key))
            elif key in _TOP and key != "selector":
                top[key] = _convert(key, value, getattr(cfg, key))
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    selector = dataclasses.replace(cfg.selector, **sel)
    return dataclasses.replace(cfg, selector=selector, **top)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), base)
