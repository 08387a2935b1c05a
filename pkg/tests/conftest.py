from pathlib import Path

import pytest

from eigs import EXAMPLES, load_example
from eigs.lab import RandomSpecParams, random_spec
from eigs.model import load_spec

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"
SEEDS = range(1, 26)


@pytest.fixture(scope="session")
def splendor():
    return load_example("splendor")


@pytest.fixture(scope="session")
def broken():
    return load_example("broken_dhl")


@pytest.fixture(scope="session")
def classical():
    return load_example("classical_dhl")


@pytest.fixture(scope="session")
def tree():
    return load_example("binary_tree")


@pytest.fixture(scope="session")
def path3():
    return load_spec(FIXTURES / "path3.json")


def examples():
    return {name: load_example(name) for name in EXAMPLES}


def random_corpus():
    return [random_spec(RandomSpecParams(seed=s)) for s in SEEDS]


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
