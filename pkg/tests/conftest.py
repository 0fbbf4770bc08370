import numpy as np
import pytest
from hypothesis import settings

from aeropipe.mesh import Mesh

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

_CRITERIA: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def record_criterion():
    """Store one acceptance outcome; printed in the terminal summary."""

    def record(number: int, name: str, passed: bool, detail: str = ""):
        _CRITERIA[number] = (name, bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        name, ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}  {detail}")


UNIT_CUBE = np.array(
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], dtype=float
)
UNIT_TET = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)


@pytest.fixture
def cube():
    return Mesh(UNIT_CUBE, [("hex8", range(8))], {"A": [0]})


@pytest.fixture
def tet():
    return Mesh(UNIT_TET, [("tet4", range(4))], {"A": [0]})
