"""Shared pytest hooks.

The acceptance suite (tests/test_acceptance.py) carries one test per
shipping criterion. The hooks below replay those verdicts as a dedicated
one-line-per-criterion section at the end of the run so the gate status is
readable without scrolling through the full test listing.
"""

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    _ACCEPTANCE_RESULTS.append((name, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{outcome:6s} {name}")
