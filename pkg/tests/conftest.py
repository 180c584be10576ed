from __future__ import annotations

import sys
from pathlib import Path

from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    results = sys.modules.get("test_acceptance")
    lines = getattr(results, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(lines, key=lambda c: (int(c[1:].rstrip("fr")), c)):
        terminalreporter.write_line(lines[cid])
