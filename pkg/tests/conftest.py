import numpy as np
import pytest

from heisenperim.heisenberg import sphere_sample
from heisenperim.planar import ConvexBody
from heisenperim.surfaces import (
    Domain, build_pansu_bubble, build_polygonal_bubble, build_square_bubble, plane_graph,
    quadratic_graph, zero_graph,
)

UNIT_SQUARE = Domain.rectangle(0.0, 1.0, 0.0, 1.0)
CENTERED = Domain.rectangle(-1.0, 1.0, -1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def bodies():
    return {
        "diamond": ConvexBody.diamond(),
        "square": ConvexBody.square(),
        "disk": ConvexBody.disk(1.0),
        "hexagon": ConvexBody.regular(6),
    }


def graph_suite():
    """Smooth graphs used for cross-checks (name -> GraphSurface)."""
    return {
        "zero": zero_graph(UNIT_SQUARE),
        "plane": plane_graph(0.3, -0.7, UNIT_SQUARE, c=0.2),
        "quadratic": quadratic_graph([0.5, 0.1, 0.0, 0.4, 0.2, -0.3], UNIT_SQUARE),
        "saddle": quadratic_graph([1.0, 0.0, 0.0, 0.25, 0.0, -0.25], CENTERED),
        "bowl": quadratic_graph([1.0, 0.0, 0.0, -0.3, 0.1, -0.2], CENTERED),
    }


@pytest.fixture(scope="session")
def closed_suite():
    """Closed surfaces with positive volume (name -> surface), built once per session."""
    D = ConvexBody.diamond()
    return {
        "square-bubble": build_square_bubble(),
        "dual-bubble": build_polygonal_bubble(ConvexBody.square()),
        "hexagon-bubble": build_polygonal_bubble(ConvexBody.regular(6)),
        "pansu-bubble": build_pansu_bubble(128),
        "cc-ball-diamond": sphere_sample(D, 128),
        "cc-ball-disk": sphere_sample(ConvexBody.disk(), 128),
    }


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" | {detail}" if detail else "")
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
