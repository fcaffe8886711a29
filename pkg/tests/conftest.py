import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from helpers import ACCEPTANCE_LOG  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LOG):
        terminalreporter.write_line(line)
