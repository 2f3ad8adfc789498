import pytest

from twinhitch import _backend

BACKENDS = _backend.available()

# criterion number -> list of test outcomes, its label and measured values
_outcomes = {}
_labels = {}
_measured = {}


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run the test once per importable kernel backend."""
    previous = _backend.use(request.param)
    yield request.param
    _backend.use(previous)


def pytest_runtest_logreport(report):
    number = getattr(report, "criterion", None)
    if number is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(number, []).append(report.outcome)
    if report.when == "call":
        _measured.setdefault(number, []).extend(report.user_properties)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        report.criterion = marker.args[0]
        if len(marker.args) > 1:
            _labels[marker.args[0]] = marker.args[1]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        results = _outcomes[number]
        status = "PASS" if all(r == "passed" for r in results) else "FAIL"
        label = _labels.get(number, "")
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {label} ({len(results)} checks)")
        for key, value in _measured.get(number, []):
            terminalreporter.write_line(f"    {key} = {value}")
