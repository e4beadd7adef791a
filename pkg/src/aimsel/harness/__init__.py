"""Experiment orchestration: pipeline, selection, cross-validation, CLI."""
from .bench import BenchResult, benchmark
from .config import ExperimentConfig, load_config, parse_config
from .pipeline import (
    PipelineError, Subject, SubjectArtifacts, analyze_project, analyze_subject,
    bundled_path, load_artifacts, load_project, load_subject, run_pipeline,
)
from .selection import (
    STRATEGIES, SelectionReport, evaluate_selection, random_baseline, select,
)
from .stats import WilcoxonResult, wilcoxon_signed_rank
from .xval import (
    SelectorModel, XValResult, cross_validate, make_folds, permutation_baseline,
    train_selector,
)
