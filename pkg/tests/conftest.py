"""Shared pytest hooks: collect acceptance lines, echo them at the end."""

_ACCEPTANCE_LINES = []


def record_acceptance(line):
    """Store one PASS/FAIL line for the terminal summary section."""
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
