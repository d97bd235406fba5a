import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import DATA  # noqa: E402
from redactkit.core import Document, read_corpus  # noqa: E402
from redactkit.recognize import ingest_annotations  # noqa: E402

MARIE = "Born in Paris, Marie studied chemistry."


@pytest.fixture
def marie_doc():
    return ingest_annotations(
        Document("d1", MARIE),
        [{"start": 8, "end": 13, "label": "GPE"}, {"start": 15, "end": 20, "label": "PERSON"}],
    )


@pytest.fixture(scope="session")
def mini_paths():
    return {
        "corpus": Path(DATA / "mini_qa.jsonl"),
        "annotations": Path(DATA / "mini_qa.annotations.jsonl"),
        "predictions": Path(DATA / "mini_qa.predictions.jsonl"),
    }


@pytest.fixture(scope="session")
def mini_corpus(mini_paths):
    return list(read_corpus(mini_paths["corpus"], "qa"))


# --- acceptance summary ---------------------------------------------------

_criteria: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): test belongs to acceptance criterion n")


def pytest_runtest_logreport(report):
    n = getattr(report, "criterion", None)
    if n is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        _criteria.setdefault(n, []).append(report.passed and not report.skipped)


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        results = _criteria[n]
        failed = results.count(False)
        status = "PASS" if failed == 0 else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status} ({len(results) - failed}/{len(results)} checks passed)")
