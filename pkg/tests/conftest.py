import pytest

_CRITERIA = {}   # number -> title
_NODES = {}      # nodeid -> number
_RESULTS = {}    # number -> list of outcomes


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            number, title = mark.args
            _CRITERIA[number] = title
            _NODES[item.nodeid] = number


def pytest_runtest_logreport(report):
    number = _NODES.get(report.nodeid)
    if number is None:
        return
    if report.when == "call" or report.failed:
        _RESULTS.setdefault(number, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        outcomes = _RESULTS.get(number)
        if not outcomes:
            status = "NOT RUN"
        else:
            status = "PASS" if all(outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {_CRITERIA[number]}")
