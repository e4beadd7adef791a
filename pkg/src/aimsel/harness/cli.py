"""Command-line front end: ``aimsel <command> ...``.

Single-subject commands take a ``.mini`` file (its suite defaults to the
sibling ``<name>.tests.json``).  Corpus commands take either a project
directory of sources or a directory of pipeline artifacts.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from ..minilang import MiniError, parse, pretty_print
from ..mutagen import generate_mutants, write_catalog
from ..mutfilter import infer, minimal_cover
from ..selector.abstraction import abstract_code
from ..selector.autoencoder import AutoencoderModel
from ..selector.forest import ForestModel
from ..selector.sequences import annotate_and_window
from ..specgen import extract_grammar, fuzz_assertions, write_catalog as write_assertions
from .bench import benchmark
from .config import ExperimentConfig, load_config
from .pipeline import (
    PipelineError, SubjectArtifacts, analyze_project, analyze_subject, load_artifacts,
    load_subject, run_pipeline,
)
from .selection import STRATEGIES, evaluate_selection, select
from .xval import SelectorModel, cross_validate, permutation_baseline, train_selector


# -- helpers -----------------------------------------------------------------

def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.step_limit is not None:
        cfg = dataclasses.replace(cfg, step_limit=args.step_limit)
    return cfg


def _open_out(path: Optional[str]):
    if path in (None, "-"):
        return _Borrowed(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


class _Borrowed:
    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        self.fh.flush()


def _write_csv(rows: List[dict], path: Optional[str]) -> None:
    if not rows:
        return
    with _open_out(path) as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def format_table(rows: List[dict]) -> str:
    """Plain fixed-width table of dict rows sharing the same keys."""
    if not rows:
        return ""
    cols = list(rows[0])
    cells = [[str(c) for c in cols]] + [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def _subject(args, cfg) -> SubjectArtifacts:
    return analyze_subject(load_subject(args.file, args.tests), cfg)


def _corpus(path, cfg) -> List[SubjectArtifacts]:
    """Artifacts for a project dir (analysed now) or an artifacts dir (loaded)."""
    p = Path(path)
    if any(p.glob("*.mini")):
        return analyze_project(p, cfg)
    if (p / "labels.csv").exists():
        return [load_artifacts(p)]
    dirs = sorted(d for d in p.iterdir() if (d / "labels.csv").exists()) if p.is_dir() else []
    if not dirs:
        raise PipelineError("load", f"{path}: neither sources nor pipeline artifacts")
    return [load_artifacts(d) for d in dirs]


def _load_model(model_dir) -> SelectorModel:
    d = Path(model_dir)
    return SelectorModel(AutoencoderModel.load(d / "autoencoder.npz"),
                         ForestModel.load(d / "forest.npz"))


def _predictions(model: SelectorModel, art: SubjectArtifacts):
    seqs = [art.sequences[m] for m in art.mutant_ids]
    return dict(zip(art.mutant_ids, model.predict(seqs)))


# -- commands ----------------------------------------------------------------

def cmd_parse(args, cfg):
    source = Path(args.file).read_text(encoding="utf-8")
    try:
        program = parse(source)
    except MiniError as exc:
        print(f"{args.file}:{exc.line}:{exc.col}: {exc.msg}", file=sys.stderr)
        return 1
    print(pretty_print(program))
    return 0


def _function(args) -> str:
    return args.function or Path(args.file).stem


def cmd_mutate(args, cfg):
    program = parse(Path(args.file).read_text(encoding="utf-8"))
    mutants = generate_mutants(program, _function(args), cfg.operators)
    if args.out:
        write_catalog(mutants, args.out)
    else:
        for m in mutants:
            print(json.dumps(m.to_json(), sort_keys=True))
    print(f"{len(mutants)} mutants", file=sys.stderr)
    return 0


def cmd_fuzz(args, cfg):
    program = parse(Path(args.file).read_text(encoding="utf-8"))
    grammar = extract_grammar(program, _function(args), cfg.max_depth)
    if args.grammar:
        Path(args.grammar).write_text(grammar.to_text(), encoding="utf-8")
    cands = fuzz_assertions(grammar, args.n or cfg.fuzz_n, cfg.master_seed)
    if args.out:
        write_assertions(cands, args.out)
    else:
        for a in cands:
            print(a.text)
    print(f"{len(cands)} candidates", file=sys.stderr)
    return 0


def cmd_validate(args, cfg):
    art = _subject(args, cfg)
    rows = art.extra["validation"]
    with _open_out(args.out) as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    print(f"{sum(r['valid'] for r in rows)} of {len(rows)} candidates valid", file=sys.stderr)
    return 0


def cmd_filter(args, cfg):
    art = _subject(args, cfg)
    res = infer(art.amatrix)
    with _open_out(args.out) as fh:
        for row in art.amatrix.to_rows():
            fh.write(json.dumps(row) + "\n")
    print(f"{len(res.inferred)} inferred, {len(res.weak)} weak", file=sys.stderr)
    return 0


def cmd_label(args, cfg):
    art = _subject(args, cfg)
    _write_csv([{"mutant_id": m, "is_aim": int(art.labels[m])} for m in art.mutant_ids],
               args.out)
    print(f"{len(art.aims)} of {len(art.mutant_ids)} mutants are AIMs", file=sys.stderr)
    return 0


def cmd_subsume(args, cfg):
    art = _subject(args, cfg)
    with _open_out(args.out) as fh:
        fh.write(json.dumps(art.graph.to_json(), indent=1) + "\n")
    if args.dot:
        Path(args.dot).write_text(art.graph.to_dot(art.subsuming), encoding="utf-8")
    print(f"{len(art.subsuming)} subsuming, {len(art.graph.equivalent)} never killed",
          file=sys.stderr)
    return 0


def cmd_featurize(args, cfg):
    source = Path(args.file).read_text(encoding="utf-8")
    program = parse(source)
    labels = {}
    if not args.no_labels:
        labels = _subject(args, cfg).labels
    abstracted, _ = abstract_code(source)
    with _open_out(args.out) as fh:
        for m in generate_mutants(program, _function(args), cfg.operators):
            seq = annotate_and_window(abstracted, m, cfg.selector)
            label = int(labels[m.id]) if labels else ""
            fh.write(f"{m.id}\t{label}\t{seq.text()}\n")
    return 0


def cmd_pipeline(args, cfg):
    arts = run_pipeline(args.project, args.out, cfg)
    print(f"wrote artifacts for {len(arts)} subjects to {args.out}", file=sys.stderr)
    return 0


def cmd_train(args, cfg):
    arts = _corpus(args.data, cfg)
    model = train_selector(arts, cfg)
    out = Path(args.model)
    out.mkdir(parents=True, exist_ok=True)
    model.autoencoder.save(out / "autoencoder.npz")
    model.forest.save(out / "forest.npz")
    print(f"trained on {sum(len(a.mutant_ids) for a in arts)} mutants "
          f"from {len(arts)} subjects; model in {out}", file=sys.stderr)
    return 0


def cmd_predict(args, cfg):
    model = _load_model(args.model)
    rows = []
    for art in _corpus(args.data, cfg):
        for m, (label, score) in _predictions(model, art).items():
            rows.append({"subject": art.name, "mutant_id": m, "predicted": int(label),
                         "score": round(score, 4)})
    _write_csv(rows, args.out)
    return 0


def cmd_xval(args, cfg):
    arts = _corpus(args.data, cfg)
    res = cross_validate(arts, cfg, keep_embeddings=args.permutations > 0)
    rows = []
    for i, f in enumerate(res.folds):
        p, r, mcc = _metric_row(f.counts)
        rows.append({"fold": i, "subjects": " ".join(f.test_subjects), **f.counts.to_json(),
                     "precision": p, "recall": r, "mcc": mcc})
    p, r, mcc = _metric_row(res.pooled)
    rows.append({"fold": "pooled", "subjects": "", **res.pooled.to_json(),
                 "precision": p, "recall": r, "mcc": mcc})
    if args.out:
        _write_csv(rows, args.out)
    print(format_table(rows), end="")
    if args.permutations > 0:
        perm = permutation_baseline(res, cfg, args.permutations)
        print(f"label-permutation MCC: mean {sum(perm) / len(perm):.4f}, "
              f"max |mcc| {max(abs(x) for x in perm):.4f} over {len(perm)} permutations")
    return 0


def _metric_row(counts):
    from ..selector.metrics import metrics
    return tuple(round(x, 4) for x in metrics(counts))


def cmd_select(args, cfg):
    [art] = _corpus(args.data, cfg)
    predicted = None
    if args.strategy == "aims":
        if not args.model:
            print("--model is required for strategy aims", file=sys.stderr)
            return 2
        predicted = [m for m, (lab, _) in _predictions(_load_model(args.model), art).items()
                     if lab]
    chosen = select(args.strategy, art, n=args.n, seed=cfg.master_seed, predicted=predicted)
    report = evaluate_selection(art, chosen, args.strategy)
    print(" ".join(map(str, sorted(chosen))))
    print(format_table([report.row()]), end="", file=sys.stderr)
    return 0


def cmd_bench(args, cfg):
    arts = _corpus(args.data, cfg)
    res = benchmark(arts, cfg, measure=args.measure)
    if args.out:
        _write_csv(res.rows(), args.out)
    print(format_table(res.summary_rows()), end="")
    print(f"cost ratio all/aims: {res.cost_ratio('aims'):.2f}")
    if res.wilcoxon:
        w = res.wilcoxon
        print(f"Wilcoxon aims vs random: W = {w.statistic:g}, n = {w.n}, "
              f"p = {w.p_value:.4g} ({w.method})")
    return 0


def cmd_report(args, cfg):
    rows = []
    for art in _corpus(args.data, cfg):
        res = infer(art.amatrix)
        rows.append({"subject": art.name, "mutants": len(art.mutant_ids),
                     "tests": art.n_tests, "valid_assertions": len(art.amatrix.assertions),
                     "inferred": len(res.inferred), "aims": len(art.aims),
                     "aim_ratio": round(len(art.aims) / max(1, len(art.mutant_ids)), 4),
                     "subsuming": len(art.subsuming),
                     "never_killed": len(art.graph.equivalent),
                     "minimal_cover": len(minimal_cover(art.amatrix))})
    if args.out:
        _write_csv(rows, args.out)
    print(format_table(rows), end="")
    return 0


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="master seed (fuzzing, training, sampling)")
    common.add_argument("--step-limit", type=int, default=argparse.SUPPRESS,
                        help="interpreter step budget per test")
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="key = value configuration file")
    ap = argparse.ArgumentParser(prog="aimsel", parents=[common],
                                 description="Mutation-based assertion inference and "
                                             "learned mutant selection.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, kind=None):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=fn)
        if kind == "file":
            p.add_argument("file", help="mini-language source")
            p.add_argument("--function", help="function under test (default: file stem)")
            p.add_argument("--tests", help="test suite JSON (default: <stem>.tests.json)")
            p.add_argument("--out", "-o", help="output path (default: stdout)")
        elif kind == "data":
            p.add_argument("data", help="project directory or pipeline artifacts directory")
            p.add_argument("--out", "-o", help="CSV output path")
        return p

    add("parse", cmd_parse, "parse and pretty-print a program").add_argument("file")
    add("mutate", cmd_mutate, "write the mutant catalog", "file")
    p = add("fuzz", cmd_fuzz, "generate candidate assertions", "file")
    p.add_argument("--n", type=int, help="number of candidates")
    p.add_argument("--grammar", help="also write the extracted grammar here")
    add("validate", cmd_validate, "validate candidates against the test suite", "file")
    add("filter", cmd_filter, "assertion kill matrix (mutation filtering)", "file")
    add("label", cmd_label, "AIM labels as CSV", "file")
    p = add("subsume", cmd_subsume, "subsumption graph as JSON", "file")
    p.add_argument("--dot", help="also write Graphviz output here")
    p = add("featurize", cmd_featurize, "annotated token sequences as TSV", "file")
    p.add_argument("--no-labels", action="store_true", help="skip labelling (no execution)")
    p = add("pipeline", cmd_pipeline, "run every stage over a project directory")
    p.add_argument("project")
    p.add_argument("--out", "-o", required=True, help="artifact directory")
    p = add("train", cmd_train, "train the selector on a corpus", "data")
    p.add_argument("--model", required=True, help="model directory to write")
    p = add("predict", cmd_predict, "predict AIMs with a trained selector", "data")
    p.add_argument("--model", required=True)
    p = add("xval", cmd_xval, "project-level cross-validation", "data")
    p.add_argument("--permutations", type=int, default=0,
                   help="also run this many label-permutation baselines")
    p = add("select", cmd_select, "select mutants of one subject", "data")
    p.add_argument("--strategy", choices=STRATEGIES, required=True)
    p.add_argument("--n", type=int, help="sample size for strategy random")
    p.add_argument("--model", help="trained selector for strategy aims")
    p = add("bench", cmd_bench, "compare selection strategies over a corpus", "data")
    p.add_argument("--measure", action="store_true", help="also time the filtering stage")
    add("report", cmd_report, "per-subject summary of pipeline artifacts", "data")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("seed", "step_limit", "config"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except (PipelineError, MiniError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
