import os
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def data_dir() -> Path:
    path = Path(os.environ.get("SNN_FAULTLAB_DATA", REPO / "data" / "mnist"))
    if not path.exists():
        pytest.fail(f"MNIST IDX files not found in {path}; see README")
    return path


# one line per acceptance criterion, printed at the end of the run
CRITERIA: dict[int, tuple[bool, str]] = {}


def record(number: int, ok: bool, detail: str) -> None:
    CRITERIA[number] = (bool(ok), detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
