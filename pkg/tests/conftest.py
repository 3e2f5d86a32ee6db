import pytest

PAIRS = [(0.5, 0.6), (0.3, 0.9), (0.8, 0.25)]


@pytest.fixture(params=PAIRS, ids=lambda ab: f"a{ab[0]}-b{ab[1]}")
def pair(request):
    return request.param


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
