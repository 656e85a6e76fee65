import pytest

from wpmec.model import SystemParams, build_instance, fig3_distances


@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def fig3_devices(params):
    return build_instance(params, fig3_distances())


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line; the lines are replayed in the terminal summary."""

    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
