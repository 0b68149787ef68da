import numpy as np
import pytest

from biovessel.graph import Explicit, build_graph


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def chain(radii, spacing=1.0, y=0.0):
    """Graph along the x axis with parent -> child edges."""
    n = len(radii)
    nodes = np.array([[i * spacing, y, 0.0, r] for i, r in enumerate(radii)])
    return build_graph(nodes, Explicit([(i, i + 1) for i in range(n - 1)]))


_acceptance_lines: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number: int, name: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2} {name}: {detail}"
        _acceptance_lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
