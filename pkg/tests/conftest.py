"""Shared pytest config: per-criterion result lines for the acceptance suite."""

import pytest

_acceptance_results: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in item.nodeid:
        return
    if hasattr(report, "wasxfail"):
        status = "XFAIL (known-unattainable, see notes)"
    elif report.passed:
        status = "PASS"
    elif report.failed:
        status = "FAIL"
    else:
        status = report.outcome.upper()
    _acceptance_results.append((item.nodeid.split("::", 1)[1], status))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, status in _acceptance_results:
        terminalreporter.write_line(f"{status:>42}  {name}")
