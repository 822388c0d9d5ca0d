import pytest

_criteria = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = dict(report.user_properties).get("detail", "")
        _criteria.append((marker.args[0], marker.args[1], report.outcome, report.duration, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title, outcome, duration, detail in sorted(_criteria):
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"[{status}] {number:>2}. {title} ({duration:.1f}s) {detail}".rstrip())
