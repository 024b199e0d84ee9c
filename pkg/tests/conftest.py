import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def star_polygon(seed, nv, scale=1.0, shift=(0.0, 0.0)):
    """Random polygon star-shaped about ``shift``: sorted angles, radii in [0.5, 1]."""
    rng = np.random.default_rng(seed)
    gaps = rng.uniform(0.3, 1.0, nv)
    ang = np.cumsum(gaps) / gaps.sum() * 2 * np.pi + rng.uniform(0, 2 * np.pi)
    r = rng.uniform(0.5, 1.0, nv)
    return scale * np.column_stack([r * np.cos(ang), r * np.sin(ang)]) + np.asarray(shift)


@st.composite
def polygons(draw, max_vertices=9):
    seed = draw(st.integers(0, 2**32 - 1))
    nv = draw(st.integers(3, max_vertices))
    scale = draw(st.floats(0.01, 10.0))
    shift = draw(st.tuples(st.floats(-5, 5), st.floats(-5, 5)))
    return star_polygon(seed, nv, scale, shift)


@pytest.fixture
def unit_square():
    return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


# ------------------------------------------------------------- acceptance lines

_ACCEPTANCE = []


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line for an acceptance criterion and keep it for the summary."""

    def emit(number, title, ok, detail=""):
        line = f"CRITERION {number} {title}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
