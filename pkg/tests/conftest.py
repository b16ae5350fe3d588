import pytest

from qisa import sample_path

_criteria = {}


def pytest_runtest_logreport(report):
    title = getattr(report, "criterion", None)
    if title is None:
        return
    if report.when == "call" or report.failed:
        prev = _criteria.get(title, "PASS")
        _criteria[title] = "FAIL" if (report.failed or prev == "FAIL") else "PASS"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        number, title = marker.args
        outcome.get_result().criterion = f"criterion {number}: {title}"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for title in sorted(_criteria, key=lambda t: int(t.split()[1].rstrip(":"))):
        terminalreporter.write_line(f"[{_criteria[title]}] {title}")


@pytest.fixture(scope="session")
def half_adder_source():
    return sample_path("half_adder.qisa").read_text()
