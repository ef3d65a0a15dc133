"""Shared test plumbing.

The acceptance tests register one line per criterion through
``record_criterion``; the lines are printed in the terminal summary so
the pass/fail status of every criterion is visible even with output
capture enabled.
"""

ACCEPTANCE_RESULTS = []


def record_criterion(number: int, description: str, ok: bool):
    ACCEPTANCE_RESULTS.append((number, description, ok))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, ok in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {description}")
