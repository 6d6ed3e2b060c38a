import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import TOY_P, TOY_X  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy():
    return TOY_P.copy(), TOY_X.copy()


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def _report(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}")
        assert ok, detail

    return _report


def pytest_terminal_summary(terminalreporter):
    for rep in terminalreporter.stats.get("skipped", []):
        name = rep.nodeid.rsplit("::", 1)[-1]
        if name.startswith("test_c") and name[6:].split("_")[0].isdigit():
            reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else "skipped"
            ACCEPTANCE_LINES.append(f"[SKIP] criterion {int(name[6:].split('_')[0]):>2}: {reason.removeprefix('Skipped: ')}")
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
