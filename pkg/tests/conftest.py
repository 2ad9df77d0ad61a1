import time

import pytest


@pytest.fixture
def write(tmp_path):
    """Write bytes or text to a fresh file under tmp_path and return its path."""
    counter = iter(range(10_000))

    def _write(content, name=None):
        path = tmp_path / (name or f"f{next(counter)}.txt")
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, str):
            content = content.encode("utf-8")
        path.write_bytes(content)
        return path

    return _write


# ------------------------------------------------------------------ acceptance reporting

SUITE_BUDGET_S = 180.0
_criteria = {}
_session = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_sessionstart(session):
    _session["start"] = time.perf_counter()


def pytest_runtest_logreport(report):
    label = _labels.get(report.nodeid)
    if label is None:
        return
    if report.when == "call" or report.failed:
        prev = _criteria.get(label, (True, ""))
        ok = prev[0] and report.passed
        reason = prev[1] or ("" if report.passed else _crash_message(report))
        _criteria[label] = (ok, reason)


_labels = {}


def _crash_message(report):
    crash = getattr(report.longrepr, "reprcrash", None)
    text = crash.message if crash else report.longreprtext
    return text.strip().splitlines()[0] if text.strip() else "failed"


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            _labels[item.nodeid] = mark.args[0]


def pytest_sessionfinish(session, exitstatus):
    _session["elapsed"] = time.perf_counter() - _session.get("start", time.perf_counter())
    _session["tests"] = session.testscollected
    if _criteria and _session["elapsed"] > SUITE_BUDGET_S and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label in sorted(_criteria):
        ok, reason = _criteria[label]
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {label}" + ("" if ok else f"  -- {reason}"))
    elapsed = _session.get("elapsed", 0.0)
    verdict = "PASS" if elapsed <= SUITE_BUDGET_S else "FAIL"
    tr.write_line(f"{verdict}  C14b suite wall time {elapsed:.1f} s for {_session.get('tests', 0)} tests "
                  f"(budget {SUITE_BUDGET_S:.0f} s)")
