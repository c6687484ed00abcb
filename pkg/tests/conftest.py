import pytest

from scgldpc.cli import hamming_example

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def example():
    """Bundled (2,7) Hamming block protograph and its memory-1 spreading."""
    return hamming_example()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
