"""Builders for standard test chains.

Truncated lattice walks lose every jump that leaves the window, which turns
an infinite transient walk into a finite non-conservative chain with a
finite Green function.
"""

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .chain import Generator
from .errors import ChainError

__all__ = [
    "LatticeSpec",
    "simple_jump_law",
    "site_label",
    "build_lattice_walk",
    "build_birth_death",
    "build_complete_graph",
    "build_cycle",
    "random_chain",
]


def simple_jump_law(dim):
    """Nearest-neighbour law: each of the ``2 dim`` unit steps with probability ``1/(2 dim)``."""
    law = {}
    for axis in range(dim):
        for sign in (1, -1):
            off = [0] * dim
            off[axis] = sign
            law[tuple(off)] = 1.0 / (2 * dim)
    return law


@dataclass(frozen=True)
class LatticeSpec:
    """Random walk on the window ``{v in Z^dim : max|v_i| <= radius}``.

    ``rate`` is the total jump rate per site; ``jump_law`` maps nonzero
    offsets to probabilities summing to one (nearest-neighbour by default).
    """

    dim: int
    radius: int
    rate: float = 1.0
    jump_law: dict = None

    def __post_init__(self):
        if self.dim not in (1, 2, 3, 4):
            raise ChainError(f"dimension must be 1..4, got {self.dim}")
        if self.radius < 0:
            raise ChainError(f"radius must be non-negative, got {self.radius}")
        if not self.rate > 0:
            raise ChainError("rate must be positive")
        law = simple_jump_law(self.dim) if self.jump_law is None else dict(self.jump_law)
        for off, p in law.items():
            if len(off) != self.dim or not any(off):
                raise ChainError(f"bad jump offset {off!r}")
            if p < 0:
                raise ChainError("jump probabilities must be non-negative")
        if abs(sum(law.values()) - 1.0) > 1e-12:
            raise ChainError("jump probabilities must sum to 1")
        object.__setattr__(self, "jump_law", law)

    @property
    def width(self):
        return 2 * self.radius + 1


def site_label(coords) -> str:
    """Canonical label ``"x_y_z"`` of a lattice site."""
    return "_".join(str(int(c)) for c in coords)


def build_lattice_walk(spec: LatticeSpec) -> Generator:
    """Generator of the windowed walk; jumps out of the window become row defect.

    Sites are ordered lexicographically by coordinates.
    """
    d, r, w = spec.dim, spec.radius, spec.width
    coords = np.array(list(itertools.product(range(-r, r + 1), repeat=d)), dtype=np.int64)
    coords = coords.reshape(-1, d)
    n = coords.shape[0]
    radix = w ** np.arange(d - 1, -1, -1)
    rows, cols, vals = [], [], []
    for off, p in spec.jump_law.items():
        if p == 0:
            continue
        nb = coords + np.asarray(off)
        inside = np.all(np.abs(nb) <= r, axis=1)
        rows.append(np.flatnonzero(inside))
        cols.append((nb[inside] + r) @ radix)
        vals.append(np.full(inside.sum(), spec.rate * p))
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    rates = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    labels = [site_label(c) for c in coords]
    return Generator(labels, rates, diag=np.full(n, -spec.rate))


def _rate_list(value, n, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n,)) if np.ndim(value) == 0 else np.asarray(value, float)
    if arr.shape != (n,):
        raise ChainError(f"{name} needs {n} rates, got {arr.shape[0]}")
    if not np.all(arr > 0):
        raise ChainError(f"{name} rates must be positive")
    return arr


def build_birth_death(N, up, down) -> Generator:
    """Birth-death chain on ``0..N`` with reflecting ends.

    ``up[i]`` is the rate ``i -> i+1`` for ``i = 0..N-1`` and ``down[i]`` the
    rate ``i+1 -> i``; scalars are broadcast.
    """
    if N < 1:
        raise ChainError("need at least two states")
    up = _rate_list(up, N, "up")
    down = _rate_list(down, N, "down")
    i = np.arange(N)
    rates = sp.csr_matrix(
        (np.concatenate([up, down]), (np.concatenate([i, i + 1]), np.concatenate([i + 1, i]))),
        shape=(N + 1, N + 1),
    )
    return Generator([str(k) for k in range(N + 1)], rates, conservative=True)


def build_complete_graph(n, rate=1.0) -> Generator:
    """Every ordered pair of distinct states joined at ``rate``."""
    a = np.full((n, n), float(rate))
    np.fill_diagonal(a, 0.0)
    return Generator([str(k) for k in range(n)], a, conservative=True)


def build_cycle(n, rate=1.0) -> Generator:
    """Directed cycle ``0 -> 1 -> ... -> n-1 -> 0``."""
    i = np.arange(n)
    rates = sp.csr_matrix((np.full(n, float(rate)), (i, (i + 1) % n)), shape=(n, n))
    return Generator([str(k) for k in range(n)], rates, conservative=True)


def random_chain(n, rng, density=0.2, rate_range=(0.1, 10.0), leak_fraction=0.0, leak_range=(0.1, 10.0)):
    """Random irreducible chain with sparse rates drawn uniformly from ``rate_range``.

    A random Hamiltonian cycle guarantees irreducibility; each other ordered
    pair gets a rate with probability ``density``.  A ``leak_fraction`` of
    the states (at least one when positive) lose extra mass drawn from
    ``leak_range``, making the chain non-conservative.
    """
    rng = np.random.default_rng(rng)
    lo, hi = rate_range
    a = np.where(rng.random((n, n)) < density, rng.uniform(lo, hi, (n, n)), 0.0)
    perm = rng.permutation(n)
    a[perm, np.roll(perm, -1)] = rng.uniform(lo, hi, n)
    np.fill_diagonal(a, 0.0)
    diag = -a.sum(axis=1)
    if leak_fraction > 0:
        k = max(1, int(round(leak_fraction * n)))
        leakers = rng.choice(n, size=k, replace=False)
        diag[leakers] -= rng.uniform(*leak_range, size=k)
    return Generator([str(k) for k in range(n)], a, diag=diag)
