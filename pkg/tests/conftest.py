from collections import OrderedDict

import pytest

_RESULTS: "OrderedDict[int, list]" = OrderedDict()
_TITLES: dict = {}


class AcceptanceLog:
    """Collects the parts of each acceptance criterion for the closing summary."""

    def record(self, criterion: int, title: str, part: str, passed: bool, detail: str = ""):
        _TITLES[criterion] = title
        _RESULTS.setdefault(criterion, []).append((part, bool(passed), detail))
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(_RESULTS):
        parts = _RESULTS[c]
        ok = all(p for _, p, _ in parts)
        failed = [f"{name}: {detail}" for name, p, detail in parts if not p]
        line = f"criterion {c} [{_TITLES[c]}]: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += " (" + "; ".join(failed) + ")"
        terminalreporter.write_line(line)
