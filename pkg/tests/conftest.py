import numpy as np
import pytest

from taboohit import (
    Generator,
    build_birth_death,
    build_complete_graph,
    parse_chain,
    random_chain,
)

TRI_TEXT = """\
# complete graph on three states, rate 1/2 per edge
states: 0 1 2
conservative: true
rate: 0 1 0.5
rate: 0 2 0.5
rate: 1 0 0.5
rate: 1 2 0.5
rate: 2 0 0.5
rate: 2 1 0.5
"""

_ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}"
    if detail:
        line += f" ({detail})"
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tri():
    return parse_chain(TRI_TEXT)


@pytest.fixture
def k4():
    return build_complete_graph(4, 1.0 / 3.0)


@pytest.fixture
def ruin():
    return build_birth_death(10, 0.5, 0.5)


@pytest.fixture
def pure_death():
    return Generator(["x"], np.zeros((1, 1)), diag=[-2.0])


def random_corpus(count, seed, n_range=(5, 50), leak_fraction=0.0):
    """Random irreducible chains with varied size and sparsity."""
    rng = np.random.default_rng(seed)
    chains = []
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        density = float(rng.uniform(0.05, 0.4))
        chains.append(random_chain(n, rng, density=density, leak_fraction=leak_fraction))
    return chains


def random_query(gen, rng, taboo_size=None, allow_source_in_taboo=True):
    """Random ``(x, y, H)`` with ``y`` outside ``H`` and ``H`` nonempty."""
    n = gen.n
    if taboo_size is None:
        taboo_size = int(rng.integers(1, min(4, n - 1) + 1))
    perm = rng.permutation(n)
    y = gen.labels[perm[0]]
    h = [gen.labels[i] for i in perm[1 : 1 + taboo_size]]
    if allow_source_in_taboo:
        x = gen.labels[int(rng.integers(n))]
    else:
        pool = [s for s in gen.labels if s not in h]
        x = pool[int(rng.integers(len(pool)))]
    return x, y, h
