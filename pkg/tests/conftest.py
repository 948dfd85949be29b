import time

import pytest

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def record(request):
    """Log one acceptance line: ``record(item, passed, detail, seconds)``."""
    lines = request.config.stash[ACCEPTANCE]

    def log(item, passed, detail, seconds):
        line = f"criterion {item:>2}: {'PASS' if passed else 'FAIL'}  {detail}  ({seconds:.1f} s)"
        lines.append(line)
        print(line)
        return passed

    return log


@pytest.fixture
def clock():
    t0 = time.perf_counter()
    return lambda: time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash[ACCEPTANCE]
    if lines:
        terminalreporter.section("acceptance")
        for ln in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(ln)
