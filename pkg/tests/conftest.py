import json
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aimsel.harness.config import ExperimentConfig  # noqa: E402
from aimsel.harness.pipeline import bundled_path, load_project, run_pipeline  # noqa: E402

CORPUS = bundled_path("corpus")
DEMO = bundled_path("demo")

PIPELINE_SECONDS: list = []
XVAL_SECONDS: list = []
# "criterion N: PASS/FAIL ..." lines, echoed in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def corpus_subjects():
    return load_project(CORPUS)


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory):
    """One full default-config pipeline run over the corpus: (out_dir, artifacts)."""
    out = tmp_path_factory.mktemp("run1")
    start = time.perf_counter()
    arts = run_pipeline(CORPUS, out, ExperimentConfig())
    PIPELINE_SECONDS.append(time.perf_counter() - start)
    return out, arts


@pytest.fixture(scope="session")
def corpus_artifacts(pipeline_run):
    return pipeline_run[1]


@pytest.fixture(scope="session")
def corpus_xval(corpus_artifacts):
    """Default-config 5-fold cross-validation (the slow part of the suite)."""
    from aimsel.harness.xval import cross_validate
    start = time.perf_counter()
    res = cross_validate(corpus_artifacts, ExperimentConfig())
    XVAL_SECONDS.append(time.perf_counter() - start)
    return res


def program_of(src):
    from aimsel.minilang import parse
    return parse(src)


def load_tests(name, root=CORPUS):
    from aimsel.minilang import TestCase
    return [TestCase.from_json(o) for o in json.loads((root / f"{name}.tests.json").read_text())]
