import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_REPORT = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion and fail on FAIL."""
    lines = request.config.stash.setdefault(_REPORT, [])

    def report(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
        lines.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_REPORT, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
