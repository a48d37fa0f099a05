import pytest

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    key, title = marker.args
    prev = _results.get(key)
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "SKIP" if report.skipped else ("PASS" if report.passed else "FAIL")
        if prev is None or prev[0] == "PASS" or status == "FAIL":
            _results[key] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results, key=lambda k: int(k[2:])):
        status, title = _results[key]
        terminalreporter.write_line(f"{status:4}  {key}  {title}")
