from importlib.resources import files
from pathlib import Path

import pytest

from eql.store import Store

DATA = Path(str(files("eql") / "data"))


def load(*names: str) -> Store:
    store = Store()
    for name in names:
        report = store.load_graph(DATA / name)
        assert not report.errors, report.errors
    return store


@pytest.fixture
def awards():
    """The award fixture plus the extra alias spellings."""
    return load("awards.kgt", "awards_aliases.kgt")


@pytest.fixture
def awards_only():
    return load("awards.kgt")


@pytest.fixture
def laureates():
    return load("awards.kgt", "awards_aliases.kgt", "laureates.kgt")


@pytest.fixture
def family():
    return load("family.kgt")


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
