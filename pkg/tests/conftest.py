import numpy as np
import pytest

from teachsim.params import preset


@pytest.fixture(scope="session")
def sciurus():
    return preset("sciurus17")


@pytest.fixture(scope="session")
def foodly():
    return preset("foodly-typer")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts at the end of the run, one line per criterion."""
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
