import pytest

from v2vquality import RadioParams, ScenarioParams, ServiceProfile


@pytest.fixture
def radio():
    return RadioParams()


@pytest.fixture
def scenario():
    return ScenarioParams()


@pytest.fixture
def profile():
    return ServiceProfile()


def pytest_terminal_summary(terminalreporter):
    try:
        from tests.test_acceptance import RESULTS
    except ImportError:
        try:
            from test_acceptance import RESULTS
        except ImportError:
            return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, line = RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {line}")
