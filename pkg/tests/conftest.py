"""Collects the per-criterion report lines from the acceptance tests and
echoes them once at the end of the run, whether the tests pass or fail."""

CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES):
            terminalreporter.write_line(line)
