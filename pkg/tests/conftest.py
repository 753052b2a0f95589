import numpy as np
import pytest

from codatables.dataio import fixture_path, ingest_csv

_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion."""

    def record(name: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip()
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    def skip(name: str, reason: str) -> None:
        line = f"SKIP  {name}  {reason}"
        _ACCEPTANCE.append(line)
        pytest.skip(reason)

    record.skip = skip
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20181017)


@pytest.fixture
def table1():
    return ingest_csv(fixture_path())


@pytest.fixture
def australia(table1):
    return table1.tables[0]
