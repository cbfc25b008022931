import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dtmextract.raster import Grid

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def grid_shapes(max_side=8):
    return st.tuples(st.integers(1, max_side), st.integers(1, max_side))


elevations = st.floats(-500.0, 9000.0, allow_nan=False, allow_infinity=False)


@st.composite
def grids(draw, max_side=8, elements=elevations):
    shape = draw(grid_shapes(max_side))
    values = draw(arrays(np.float64, shape, elements=elements))
    cell = draw(st.floats(0.01, 100.0))
    x0 = draw(st.floats(-1e6, 1e6))
    y0 = draw(st.floats(-1e6, 1e6))
    return Grid(values, cell, x0, y0)


# Acceptance criteria push one line each here; printed at the end of the run.
_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    def record(name: str, ok: bool, detail: str = "") -> None:
        _ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
