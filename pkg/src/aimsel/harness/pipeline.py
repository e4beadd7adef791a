"""End-to-end per-subject pipeline and its on-disk artifacts.

A project directory holds ``<name>.mini`` sources next to ``<name>.tests.json``
suites; the function under test is the one named like the file.  Every
subject gets its own artifact directory:

==========================  ================================================
mutants.jsonl               mutant catalog
grammar.txt                 assertion grammar extracted from the signature
candidates.jsonl            fuzzed candidate assertions
validation.jsonl            per-candidate validation verdict counts
assertion_matrix.jsonl      valid assertion x mutant kills
labels.csv                  AIM labels
test_matrix.jsonl           test x mutant kills
subsumption.json / .dot     subsumption graph
featurized.tsv              ``mutant_id TAB label TAB tokens``
tests.json                  copy of the suite (for re-derivation)
==========================  ================================================

Nothing time-dependent is written, so reruns are byte-identical.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from ..minilang import Program, TestCase, parse, run_suite
from ..minilang.interp import check_test
from ..mutagen import Mutant, generate_mutants, run_mutants, write_catalog
from ..mutfilter import (
    AssertionKillMatrix, build_assertion_kill_matrix, infer, read_labels, write_labels,
)
from ..selector.abstraction import abstract_code
from ..selector.sequences import TokenSequence, annotate_and_window
from ..specgen import (
    extract_grammar, fuzz_assertions, validate, validation_report,
    write_catalog as write_assertions,
)
from ..subsumption import (
    SubsumptionGraph, TestKillMatrix, build_test_kill_matrix, subsumption_graph,
    subsuming_mutants,
)
from .config import ExperimentConfig


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class Subject:
    name: str
    source: str
    program: Program
    tests: List[TestCase]

    @property
    def function(self) -> str:
        return self.name


def load_subject(mini_path, tests_path=None) -> Subject:
    mini_path = Path(mini_path)
    name = mini_path.stem
    tests_path = Path(tests_path) if tests_path else mini_path.with_name(name + ".tests.json")
    try:
        source = mini_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PipelineError("load", f"{mini_path}: {exc.strerror}") from None
    try:
        program = parse(source)
    except Exception as exc:
        raise PipelineError("parse", f"{mini_path}: {exc}") from None
    try:
        tests = [TestCase.from_json(o) for o in json.loads(tests_path.read_text(encoding="utf-8"))]
    except OSError:
        raise PipelineError("load", f"missing test suite {tests_path}") from None
    try:
        program.function(name)
        for t in tests:
            check_test(program, t)
    except Exception as exc:
        raise PipelineError("load", f"{mini_path}: {exc}") from None
    if not tests:
        raise PipelineError("load", f"{tests_path}: empty test suite")
    return Subject(name, source, program, tests)


def load_project(project_dir) -> List[Subject]:
    project_dir = Path(project_dir)
    if not project_dir.is_dir():
        raise PipelineError("load", f"{project_dir} is not a directory")
    paths = sorted(project_dir.glob("*.mini"))
    if not paths:
        raise PipelineError("load", f"no .mini sources in {project_dir}")
    return [load_subject(p) for p in paths]


@dataclass
class SubjectArtifacts:
    """Everything downstream stages need, in memory.

    Instances rebuilt from disk (``load_artifacts``) carry ``subject=None``
    and no mutant programs; selection and evaluation only need the matrices.
    """
    name: str
    mutant_ids: List[int]
    n_tests: int
    amatrix: AssertionKillMatrix
    tmatrix: TestKillMatrix
    labels: Dict[int, bool]
    sequences: Dict[int, TokenSequence]
    graph: SubsumptionGraph
    subject: Optional[Subject] = None
    mutants: List[Mutant] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    filter_seconds: Optional[float] = None

    @property
    def aims(self) -> frozenset:
        return frozenset(m for m, v in self.labels.items() if v)

    @property
    def subsuming(self) -> frozenset:
        return subsuming_mutants(self.graph)


def analyze_subject(subject: Subject, config: ExperimentConfig) -> SubjectArtifacts:
    stage = "mutate"
    try:
        mutants = generate_mutants(subject.program, subject.function, config.operators)
        stage = "fuzz"
        grammar = extract_grammar(subject.program, subject.function, config.max_depth)
        candidates = fuzz_assertions(grammar, config.fuzz_n, config.master_seed)
        stage = "validate"
        original = run_suite(subject.program, subject.tests, config.step_limit)
        rows = validation_report(candidates, original)
        valid = validate(candidates, original)
        stage = "execute"
        start = time.perf_counter()
        records = run_mutants(mutants, subject.tests, config.step_limit)
        stage = "filter"
        amatrix = build_assertion_kill_matrix(valid, mutants, subject.tests,
                                              config.step_limit, records=records)
        filter_seconds = time.perf_counter() - start
        aims = infer(amatrix).aim_set
        stage = "subsume"
        tmatrix = build_test_kill_matrix(subject.program, mutants, subject.tests,
                                         config.step_limit, records=records, original=original)
        graph = subsumption_graph(tmatrix)
        stage = "featurize"
        abstracted, _ = abstract_code(subject.source)
        sequences = {m.id: annotate_and_window(abstracted, m, config.selector) for m in mutants}
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(stage, f"{subject.name}: {exc}") from exc
    return SubjectArtifacts(
        name=subject.name, mutant_ids=[m.id for m in mutants], n_tests=len(subject.tests),
        amatrix=amatrix, tmatrix=tmatrix, labels={m.id: m.id in aims for m in mutants},
        sequences=sequences, graph=graph, subject=subject, mutants=mutants,
        extra={"grammar": grammar, "candidates": candidates, "validation": rows,
               "step_limit": config.step_limit},
        filter_seconds=filter_seconds)


def write_artifacts(art: SubjectArtifacts, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_catalog(art.mutants, out / "mutants.jsonl")
    (out / "grammar.txt").write_text(art.extra["grammar"].to_text(), encoding="utf-8")
    write_assertions(art.extra["candidates"], out / "candidates.jsonl")
    with open(out / "validation.jsonl", "w", encoding="utf-8") as fh:
        for row in art.extra["validation"]:
            fh.write(json.dumps(row) + "\n")
    art.amatrix.write_jsonl(out / "assertion_matrix.jsonl")
    write_labels(art.amatrix, out / "labels.csv")
    art.tmatrix.write_jsonl(out / "test_matrix.jsonl")
    (out / "subsumption.json").write_text(
        json.dumps(art.graph.to_json(), indent=1) + "\n", encoding="utf-8")
    (out / "subsumption.dot").write_text(art.graph.to_dot(art.subsuming), encoding="utf-8")
    with open(out / "featurized.tsv", "w", encoding="utf-8") as fh:
        for m in art.mutant_ids:
            fh.write(f"{m}\t{int(art.labels[m])}\t{art.sequences[m].text()}\n")
    with open(out / "tests.json", "w", encoding="utf-8") as fh:
        json.dump([t.to_json() for t in art.subject.tests], fh)
        fh.write("\n")
    return out


def read_featurized(path) -> Dict[int, tuple]:
    """mutant id -> (label, TokenSequence) from a featurized.tsv file."""
    from ..selector.sequences import MST
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            mid, label, text = line.rstrip("\n").split("\t")
            tokens = tuple(text.split())
            out[int(mid)] = (label == "1", TokenSequence(tokens, tokens.index(MST)))
    return out


def load_artifacts(subject_dir) -> SubjectArtifacts:
    """Rebuild the matrices, labels and sequences from a subject directory."""
    d = Path(subject_dir)
    try:
        with open(d / "mutants.jsonl", encoding="utf-8") as fh:
            ids = [json.loads(line)["id"] for line in fh if line.strip()]
        with open(d / "tests.json", encoding="utf-8") as fh:
            n_tests = len(json.load(fh))
        amatrix = AssertionKillMatrix.read_jsonl(d / "assertion_matrix.jsonl", ids)
        tmatrix = TestKillMatrix.read_jsonl(d / "test_matrix.jsonl", ids)
        labels = read_labels(d / "labels.csv")
        feats = read_featurized(d / "featurized.tsv")
    except OSError as exc:
        raise PipelineError("load", f"{d}: missing artifact {exc.filename}") from None
    return SubjectArtifacts(
        name=d.name, mutant_ids=ids, n_tests=n_tests, amatrix=amatrix, tmatrix=tmatrix,
        labels=labels, sequences={m: s for m, (_, s) in feats.items()},
        graph=subsumption_graph(tmatrix))


def analyze_project(project_dir, config: ExperimentConfig) -> List[SubjectArtifacts]:
    return [analyze_subject(s, config) for s in load_project(project_dir)]


def run_pipeline(project_dir, out_dir, config: Optional[ExperimentConfig] = None
                 ) -> List[SubjectArtifacts]:
    """Analyse every subject of ``project_dir`` and write ``out_dir/<name>/``."""
    config = config or ExperimentConfig()
    arts = analyze_project(project_dir, config)
    for art in arts:
        write_artifacts(art, os.path.join(out_dir, art.name))
    return arts


def bundled_path(kind: str = "corpus") -> Path:
    """Directory of a bundled project: ``corpus`` or ``demo``."""
    return Path(__file__).resolve().parent.parent / "data" / kind
