import os

CRITERIA_LOG = os.path.join(os.path.dirname(__file__), ".criteria_report.txt")


def pytest_sessionstart(session):
    if os.path.exists(CRITERIA_LOG):
        os.remove(CRITERIA_LOG)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the one-line-per-criterion acceptance results after the run."""
    if not os.path.exists(CRITERIA_LOG):
        return
    with open(CRITERIA_LOG) as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
