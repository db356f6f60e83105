"""Shared pytest wiring: the acceptance verdict summary.

``test_acceptance.py`` records one (number, status, description) triple per
criterion; printing happens here, after capture ends, so the verdict lines
show up on a plain ``pytest`` run.
"""

acceptance_verdicts = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, description in sorted(acceptance_verdicts):
        terminalreporter.write_line(f"ACCEPTANCE {num}: {status} - {description}")
