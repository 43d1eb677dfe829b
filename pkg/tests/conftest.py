from pathlib import Path

import pytest

from tracelab import parse_formula, parse_program

FIXTURES = Path(__file__).parent / "fixtures"

# filled by the acceptance suite, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def load_program(name: str):
    return parse_program((FIXTURES / name).read_text())


def load_formula(name: str):
    return parse_formula((FIXTURES / name).read_text())


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def even():
    return load_program("even.rec")


@pytest.fixture(scope="session")
def down():
    return load_program("down.rec")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
