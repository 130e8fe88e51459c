"""Expected occupation times: ordinary and taboo Green functions.

For a nonempty taboo set ``H`` the matrix of expected times spent at ``y``
before entering ``H`` (starting from ``x``, the taboo active only after the
first jump) is the inverse of the negated generator restricted to
``S \\ H``.  Rows for ``x`` in ``H`` follow from one jump step.  With ``H``
empty the same inverse is the Green function, finite only for a
non-conservative (truncated) representation.

Columns are computed on demand from one factorization, so large truncated
lattices never materialize a dense inverse.
"""

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse import csgraph

from .chain import Generator, TabooSet, validate
from .errors import (
    ChainError,
    NumericalDegeneracy,
    ReducibleChainError,
    TabooGreenDivergence,
)

__all__ = [
    "DENSE_LIMIT",
    "RCOND_MIN",
    "RESIDUAL_TOL",
    "OccupationTimes",
    "GreenResult",
    "taboo_green",
    "green_function",
    "is_recurrent",
    "can_reach",
]

DENSE_LIMIT = 500
RCOND_MIN = 1e-13
RESIDUAL_TOL = 1e-10


def can_reach(adjacency, sources):
    """Mask of nodes with a directed path (possibly empty) into ``sources``."""
    adjacency = sp.csr_matrix(adjacency)
    m = adjacency.shape[0]
    sources = np.asarray(sources, dtype=bool)
    if not sources.any():
        return np.zeros(m, dtype=bool)
    sink = sp.csr_matrix(
        (np.ones(sources.sum()), (np.flatnonzero(sources), np.full(sources.sum(), m))),
        shape=(m + 1, m + 1),
    )
    graph = sp.bmat([[adjacency, None], [None, sp.csr_matrix((1, 1))]]).tocsr() + sink
    order = csgraph.breadth_first_order(graph.T.tocsr(), m, directed=True, return_predecessors=False)
    mask = np.zeros(m + 1, dtype=bool)
    mask[order] = True
    return mask[:m]


class LinearSolver:
    """Factorized square system with per-solve residual checks.

    Dense LU with a reciprocal-condition guard up to ``DENSE_LIMIT``
    unknowns, sparse LU (SuperLU) above.
    """

    def __init__(self, matrix, what="linear system", equation=None):
        self.matrix = sp.csr_matrix(matrix)
        self.what = what
        self.equation = equation
        m = self.matrix.shape[0]
        if m <= DENSE_LIMIT:
            dense = self.matrix.toarray()
            lu, piv, info = sla.lapack.dgetrf(dense)
            if info > 0:
                raise TabooGreenDivergence(f"{what} is singular", equation)
            rcond, _ = sla.lapack.dgecon(lu, np.abs(dense).sum(axis=0).max(), norm="1")
            if rcond < RCOND_MIN:
                raise TabooGreenDivergence(
                    f"{what} is numerically singular (rcond={rcond:.3g})", equation
                )
            self._lu = (lu, piv)
            self._splu = None
        else:
            try:
                self._splu = spla.splu(self.matrix.tocsc())
            except RuntimeError as exc:
                raise TabooGreenDivergence(f"{what} is singular: {exc}", equation) from None
            self._lu = None

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if self._lu is not None:
            x = sla.lu_solve(self._lu, rhs)
        else:
            x = self._splu.solve(rhs)
        resid = self.matrix @ x - rhs
        worst = float(np.max(np.abs(resid))) if resid.size else 0.0
        if not np.isfinite(worst) or worst > RESIDUAL_TOL:
            raise NumericalDegeneracy(
                f"{self.what}: residual {worst:.3g} exceeds {RESIDUAL_TOL:g}", self.equation
            )
        self.last_residual = worst
        return x


class OccupationTimes:
    """Expected time spent at each free state before the taboo set is entered.

    Parameters
    ----------
    gen : Generator
    taboo : TabooSet or iterable of labels
        May be empty only when ``gen`` is non-conservative.

    Raises
    ------
    TabooGreenDivergence
        Some free state cannot leave ``S \\ H`` (a closed class with no
        exit to the taboo set or the truncation boundary).
    """

    def __init__(self, gen: Generator, taboo=None):
        self.gen = gen
        self.taboo = TabooSet.of(taboo).check(gen.states)
        in_h = self.taboo.mask(gen.states)
        if in_h.all():
            raise ChainError("taboo set covers every state")
        self._in_h = in_h
        self.free = np.flatnonzero(~in_h)
        self._pos = -np.ones(gen.n, dtype=int)
        self._pos[self.free] = np.arange(self.free.size)

        rates = gen._rates
        sub = rates[self.free][:, self.free]
        into_h = np.asarray(rates[self.free][:, np.flatnonzero(in_h)].sum(axis=1)).ravel() > 0
        leaky = gen.leaky[self.free] | into_h
        ok = can_reach(sub, leaky)
        label = "taboo Green function" if self.taboo else "Green function"
        if not ok.all():
            stuck = [gen.labels[i] for i in self.free[~ok]]
            raise TabooGreenDivergence(
                f"{label} diverges: no escape from {' '.join(stuck[:8])}"
                + (" ..." if len(stuck) > 8 else ""),
                "taboo Green",
            )
        neg = sp.diags(-gen.diag[self.free]) - sub
        self._solver = LinearSolver(neg, label, "taboo Green")
        self._jump_h = None
        if in_h.any():
            h_idx = np.flatnonzero(in_h)
            self._h_idx = h_idx
            self._jump_h = sp.diags(1.0 / gen.exit_rates[h_idx]) @ rates[h_idx][:, self.free]
        self._cache = {}

    @property
    def column_labels(self):
        return tuple(self.gen.labels[i] for i in self.free)

    @property
    def residual(self):
        return getattr(self._solver, "last_residual", 0.0)

    @staticmethod
    def _nonnegative(m):
        # round-off below an exact zero (unreachable pairs)
        if m.size and m.min() < -RESIDUAL_TOL:
            raise NumericalDegeneracy(f"negative occupation time {m.min():.3g}", "taboo Green")
        return np.maximum(m, 0.0)

    def column(self, y) -> np.ndarray:
        """Occupation times of ``y`` from every start state, indexed like ``gen.labels``."""
        j = self.gen.states.position(y)
        if self._pos[j] < 0:
            raise ChainError(f"column {y!r} lies in the taboo set")
        if j not in self._cache:
            e = np.zeros(self.free.size)
            e[self._pos[j]] = 1.0
            m = self._nonnegative(self._solver.solve(e))
            full = np.zeros(self.gen.n)
            full[self.free] = m
            if self._jump_h is not None:
                full[self._h_idx] = self._jump_h @ m
            full.flags.writeable = False
            self._cache[j] = full
        return self._cache[j]

    def value(self, x, y) -> float:
        return float(self.column(y)[self.gen.states.position(x)])

    def matrix(self) -> np.ndarray:
        """Dense (n, |S \\ H|) matrix; rows follow ``gen.labels``, columns ``column_labels``."""
        eye = np.eye(self.free.size)
        m = self._nonnegative(self._solver.solve(eye))
        full = np.zeros((self.gen.n, self.free.size))
        full[self.free] = m
        if self._jump_h is not None:
            full[self._h_idx] = self._jump_h @ m
        return full


def taboo_green(gen: Generator, taboo) -> OccupationTimes:
    """Taboo Green function for a nonempty taboo set."""
    h = TabooSet.of(taboo)
    if not h:
        raise ValueError("taboo set must be nonempty; use green_function for the empty taboo")
    return OccupationTimes(gen, h)


class GreenResult:
    """Either ``recurrent`` (no finite Green function) or finite occupation times."""

    def __init__(self, recurrent, times=None):
        self.recurrent = recurrent
        self.times = times

    def _finite(self):
        if self.recurrent:
            raise ArithmeticError("recurrent chain: Green function is infinite")
        return self.times

    def column(self, y):
        return self._finite().column(y)

    def value(self, x, y):
        return self._finite().value(x, y)

    def matrix(self):
        return self._finite().matrix()

    def __repr__(self):
        return "GreenResult(recurrent)" if self.recurrent else f"GreenResult(finite, n={self.times.gen.n})"


def green_function(gen: Generator) -> GreenResult:
    """Green function G(x, y) of ``gen``, or the recurrent verdict.

    Raises
    ------
    ReducibleChainError
        For a conservative generator that is not irreducible.
    TabooGreenDivergence
        For a non-conservative generator with a closed conservative class.
    """
    if gen.conservative:
        if not validate(gen).irreducible:
            raise ReducibleChainError("conservative generator is not irreducible")
        return GreenResult(True)
    return GreenResult(False, OccupationTimes(gen))


def is_recurrent(gen: Generator) -> bool:
    """A finite irreducible chain is recurrent iff it loses no mass."""
    if not validate(gen).irreducible:
        raise ReducibleChainError("recurrence is defined here for irreducible generators only")
    return gen.conservative
