import numpy as np
import pytest

from sbgd.graph import build_dag

# (criterion, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


def chain(k, d=2):
    return build_dag(k + 1, [(s, s + 1) for s in range(k) for _ in range(d)])


def diamond():
    # s=0, a=1, b=2, t=3 with the cross edge a->b
    return build_dag(4, [(0, 1), (0, 2), (1, 3), (2, 3), (1, 2)])


def random_dag(rng, nodes, density=0.5, max_parallel=2):
    """Random DAG on 0..nodes-1 (edges go low->high) that always has a 0->last path."""
    edges = [(v, v + 1) for v in range(nodes - 1)]
    for u in range(nodes):
        for v in range(u + 1, nodes):
            if rng.random() < density:
                for _ in range(int(rng.integers(1, max_parallel + 1))):
                    edges.append((u, v))
    order = rng.permutation(len(edges))
    return build_dag(nodes, [edges[i] for i in order])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
