import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion; the line is printed in the run summary."""
    def record(number: int, name: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:2d} {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        _LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
