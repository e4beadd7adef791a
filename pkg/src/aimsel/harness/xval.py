"""Project-level k-fold cross-validation of the learned selector.

Subjects (never individual mutants) are dealt into folds: they are ordered
by ``sha256("<seed>:<name>")`` and assigned round-robin.  Each fold trains
the autoencoder and forest on the other folds only, with a vocabulary built
from those folds.
"""
from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..selector.autoencoder import AutoencoderModel, embed_many, train_autoencoder
from ..selector.forest import ForestModel, train_forest
from ..selector.metrics import PredictionCounts, metrics
from .config import ExperimentConfig


def make_folds(names: Sequence[str], k: int, seed: int) -> List[List[str]]:
    if len(names) < k:
        raise ValueError(f"need at least {k} subjects for {k} folds, got {len(names)}")
    order = sorted(names, key=lambda n: hashlib.sha256(f"{seed}:{n}".encode()).hexdigest())
    folds: List[List[str]] = [[] for _ in range(k)]
    for i, name in enumerate(order):
        folds[i % k].append(name)
    return [sorted(f) for f in folds]


def _dataset(arts):
    keys, seqs, labels = [], [], []
    for art in arts:
        for m in art.mutant_ids:
            keys.append((art.name, m))
            seqs.append(art.sequences[m])
            labels.append(art.labels[m])
    return keys, seqs, np.array(labels, dtype=bool)


@dataclass
class SelectorModel:
    """Autoencoder plus forest, trained together."""
    autoencoder: AutoencoderModel
    forest: ForestModel

    def predict(self, seqs) -> List[Tuple[bool, float]]:
        scores = self.forest.scores(embed_many(self.autoencoder, seqs))
        return [(bool(s > 0.5), float(s)) for s in scores]


def train_selector(arts, config: ExperimentConfig) -> SelectorModel:
    _, seqs, y = _dataset(arts)
    ae = train_autoencoder(seqs, config.selector)
    X = embed_many(ae, seqs)
    return SelectorModel(ae, train_forest(X, y, config.selector.seed, config.selector.n_trees))


@dataclass
class FoldResult:
    test_subjects: List[str]
    train_subjects: List[str]
    counts: PredictionCounts
    predictions: Dict[Tuple[str, int], Tuple[bool, float]]
    # kept for the permutation baseline; the autoencoder never sees labels
    train_X: Optional[np.ndarray] = field(default=None, repr=False)
    train_y: Optional[np.ndarray] = field(default=None, repr=False)
    test_X: Optional[np.ndarray] = field(default=None, repr=False)
    test_y: Optional[np.ndarray] = field(default=None, repr=False)
    loss_history: List[float] = field(default_factory=list)


@dataclass
class XValResult:
    folds: List[FoldResult]

    @property
    def pooled(self) -> PredictionCounts:
        total = PredictionCounts()
        for f in self.folds:
            total = total + f.counts
        return total

    @property
    def metrics(self) -> Tuple[float, float, float]:
        return metrics(self.pooled)

    def predicted(self, subject: str) -> frozenset:
        """Ids predicted positive for ``subject`` by the fold that tested it."""
        for f in self.folds:
            if subject in f.test_subjects:
                return frozenset(m for (s, m), (lab, _) in f.predictions.items()
                                 if s == subject and lab)
        raise KeyError(subject)


def cross_validate(arts, config: ExperimentConfig, keep_embeddings: bool = True) -> XValResult:
    by_name = {a.name: a for a in arts}
    folds = make_folds(sorted(by_name), config.k_folds, config.master_seed)
    results = []
    for test_names in folds:
        train_names = sorted(n for n in by_name if n not in test_names)
        train_arts = [by_name[n] for n in train_names]
        test_arts = [by_name[n] for n in test_names]
        _, train_seqs, train_y = _dataset(train_arts)
        test_keys, test_seqs, test_y = _dataset(test_arts)
        ae = train_autoencoder(train_seqs, config.selector)
        train_X = embed_many(ae, train_seqs)
        test_X = embed_many(ae, test_seqs)
        forest = train_forest(train_X, train_y, config.selector.seed, config.selector.n_trees)
        scores = forest.scores(test_X)
        labels = scores > 0.5
        preds = {k: (bool(lab), float(s)) for k, lab, s in zip(test_keys, labels, scores)}
        counts = PredictionCounts.from_labels(labels, test_y)
        fr = FoldResult(list(test_names), train_names, counts, preds,
                        loss_history=list(ae.loss_history))
        if keep_embeddings:
            fr.train_X, fr.train_y, fr.test_X, fr.test_y = train_X, train_y, test_X, test_y
        results.append(fr)
    return XValResult(results)


def permutation_baseline(result: XValResult, config: ExperimentConfig,
                         n_permutations: int = 20) -> List[float]:
    """Pooled MCC with training labels shuffled within each fold.

    Reuses each fold's embeddings: the autoencoder is trained without labels,
    so only the forest has to be retrained.
    """
    if any(f.train_X is None for f in result.folds):
        raise ValueError("cross-validation result was run without keep_embeddings")
    rng = np.random.default_rng(np.random.SeedSequence([config.master_seed, 0x5EED]))
    out = []
    for _ in range(n_permutations):
        total = PredictionCounts()
        for f in result.folds:
            y = rng.permutation(f.train_y)
            forest = train_forest(f.train_X, y, config.selector.seed, config.selector.n_trees)
            pred = forest.scores(f.test_X) > 0.5
            total = total + PredictionCounts.from_labels(pred, f.test_y)
        out.append(metrics(total)[2])
    return out
