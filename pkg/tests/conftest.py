import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tamine.ingest import SampleSet, weekday_only  # noqa: E402
from tamine.pipeline import build_db  # noqa: E402
from tamine.synthetic import TRAIN_START, planted_knowledge_base, planted_samples  # noqa: E402

_criteria: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion checked by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    n, title = marker.args
    ok = report.passed if report.when == "call" else not report.failed
    if report.when == "setup" and ok:
        return
    prev = _criteria.get(n, (title, True))[1]
    _criteria[n] = (title, prev and ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, ok = _criteria[n]
        terminalreporter.write_line(f"criterion {n} {title}: {'PASS' if ok else 'FAIL'}")


@pytest.fixture(scope="session")
def planted_train():
    """Knowledge base and weekday item lists of the planted training week."""
    kb = planted_knowledge_base()
    samples = SampleSet.from_samples(planted_samples(TRAIN_START, 7), kb.concepts)
    return kb, build_db(samples.filter(weekday_only), kb)


@pytest.fixture(scope="session")
def planted_trained():
    """Default training run on the planted week, with its wall time."""
    import time

    from tamine.pipeline import train

    kb = planted_knowledge_base()
    samples = SampleSet.from_samples(planted_samples(TRAIN_START, 7), kb.concepts)
    started = time.perf_counter()
    result = train(samples.filter(weekday_only), kb)
    return result, time.perf_counter() - started
