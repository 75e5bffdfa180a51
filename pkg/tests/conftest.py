import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"
_CRITERIA: list[str] = []


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def corpus_manifest():
    return DATA / "corpus" / "manifest.yaml"


@pytest.fixture
def bad_manifest():
    return DATA / "bad_corpus" / "manifest.yaml"


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number: int, name: str, ok: bool, detail: str = ""):
        _CRITERIA.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {name}" + (f": {detail}" if detail else ""))
        print(_CRITERIA[-1])
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split("] ")[1].split(".")[0])):
            terminalreporter.write_line(line)
