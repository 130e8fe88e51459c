"""Continuous-time Markov chain generators.

A :class:`Generator` stores the off-diagonal rates of a Q-matrix as a CSR
matrix and the diagonal as a dense vector, both indexed by declaration order
of the state labels.  Generators are immutable once built; every constructor
validates the sign and row-sum invariants.

Chain files are plain text::

    # comment
    states: a b c
    conservative: true
    rate: a b 1.5
    rate: b a 2
    diag: c -0.5

Diagonal lines may be omitted, in which case the diagonal is the negative
off-diagonal row sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import ChainError

__all__ = [
    "ROW_SUM_RTOL",
    "StateSpace",
    "Generator",
    "JumpKernel",
    "TabooSet",
    "HittingQuery",
    "ValidationReport",
    "parse_chain",
    "format_chain",
    "validate",
    "embedded_chain",
    "restrict",
    "exit_time_cdf",
]

ROW_SUM_RTOL = 1e-12


@dataclass(frozen=True)
class StateSpace:
    """Ordered, duplicate-free state labels."""

    labels: tuple[str, ...]
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        if not labels:
            raise ChainError("state space is empty")
        index = {}
        for i, s in enumerate(labels):
            if not s or any(c.isspace() for c in s) or "," in s:
                raise ChainError(f"invalid state label {s!r}")
            if s in index:
                raise ChainError(f"duplicate state {s!r}")
            index[s] = i
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "index", index)

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self.index

    def position(self, label) -> int:
        try:
            return self.index[str(label)]
        except KeyError:
            raise ChainError(f"unknown state {label!r}") from None


def _as_states(states) -> StateSpace:
    return states if isinstance(states, StateSpace) else StateSpace(tuple(states))


class Generator:
    """Q-matrix of a finite continuous-time Markov chain.

    Parameters
    ----------
    states : StateSpace or sequence of str
    rates : sparse or dense (n, n) array
        Off-diagonal rates a(x, y) >= 0.  Any diagonal entries are ignored.
    diag : (n,) array, optional
        Diagonal entries a(x, x) < 0.  Derived as the negative row sum of
        ``rates`` when omitted.
    conservative : bool, optional
        Expected conservativeness.  When given it is checked against the
        rates; when omitted it is inferred.

    Raises
    ------
    ChainError
        On negative rates, non-negative or non-finite diagonals, rows whose
        total exceeds zero beyond ``ROW_SUM_RTOL * |a(x,x)|``, or a
        ``conservative`` flag inconsistent with the rates.
    """

    def __init__(self, states, rates, diag=None, conservative=None):
        self.states = _as_states(states)
        n = len(self.states)
        r = sp.csr_matrix(rates, dtype=float, copy=True)
        if r.shape != (n, n):
            raise ChainError(f"rate matrix shape {r.shape} does not match {n} states")
        r.setdiag(0.0)
        r.eliminate_zeros()
        r.sort_indices()
        if r.nnz and not np.all(np.isfinite(r.data)):
            raise ChainError("non-finite rate")
        if r.nnz and r.data.min() < 0:
            i = int(np.argmin(r.data))
            row = int(np.searchsorted(r.indptr, i, side="right") - 1)
            col = int(r.indices[i])
            raise ChainError(
                f"negative rate {r.data[i]} from {self.states.labels[row]!r}"
                f" to {self.states.labels[col]!r}"
            )
        out = np.asarray(r.sum(axis=1)).ravel()
        if diag is None:
            d = -out
        else:
            d = np.array(diag, dtype=float).reshape(n)
        bad = ~(np.isfinite(d) & (d < 0))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ChainError(
                f"diagonal of {self.states.labels[i]!r} must be finite and negative, got {d[i]}"
            )
        total = d + out
        tol = ROW_SUM_RTOL * np.abs(d)
        over = total > tol
        if over.any():
            i = int(np.flatnonzero(over)[0])
            raise ChainError(
                f"row-sum violation at {self.states.labels[i]!r}: outflow exceeds exit rate by {total[i]:g}"
            )
        leaky = total < -tol
        is_conservative = not leaky.any()
        if conservative is not None and bool(conservative) != is_conservative:
            if conservative:
                i = int(np.flatnonzero(leaky)[0])
                raise ChainError(
                    f"row-sum violation at {self.states.labels[i]!r}: "
                    f"declared conservative but row sums to {total[i]:g}"
                )
            raise ChainError("declared non-conservative but every row sums to zero")
        if is_conservative:
            # canonical diagonal, so equal rates give bit-identical generators
            d = -out

        d.flags.writeable = False
        defect = np.where(leaky, -total, 0.0)
        defect.flags.writeable = False
        leaky.flags.writeable = False
        self._rates = r
        self.diag = d
        self.defect = defect
        self.leaky = leaky
        self.conservative = is_conservative

    # -- construction helpers -------------------------------------------
    @classmethod
    def from_dense(cls, states, matrix, conservative=None):
        """Build from a full Q-matrix, diagonal included."""
        a = np.asarray(matrix, dtype=float)
        return cls(states, a, diag=np.diag(a).copy(), conservative=conservative)

    @classmethod
    def from_triples(cls, states, triples, diag=None, conservative=None):
        """Build from ``(from, to, rate)`` label triples and an optional ``{label: a(x,x)}`` map."""
        states = _as_states(states)
        n = len(states)
        rows, cols, vals = [], [], []
        for x, y, v in triples:
            rows.append(states.position(x))
            cols.append(states.position(y))
            vals.append(float(v))
        r = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        d = None
        if diag is not None:
            out = np.asarray(r.sum(axis=1)).ravel()
            d = -out
            for x, v in diag.items():
                d[states.position(x)] = float(v)
        return cls(states, r, diag=d, conservative=conservative)

    # -- accessors --------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.states.labels

    @property
    def rates(self) -> sp.csr_matrix:
        """Off-diagonal rates (a copy; the generator itself is immutable)."""
        return self._rates.copy()

    @property
    def exit_rates(self) -> np.ndarray:
        """Vector of -a(x, x)."""
        return -self.diag

    def rate(self, x, y) -> float:
        i, j = self.states.position(x), self.states.position(y)
        if i == j:
            return float(self.diag[i])
        return float(self._rates[i, j])

    def neighbors(self, x):
        """``(label, rate)`` pairs of positive off-diagonal rates out of ``x``."""
        i = self.states.position(x)
        r = self._rates
        lo, hi = r.indptr[i], r.indptr[i + 1]
        return [(self.labels[j], float(v)) for j, v in zip(r.indices[lo:hi], r.data[lo:hi])]

    def triples(self):
        """Off-diagonal ``(from, to, rate)`` triples in row-major order."""
        r = self._rates
        out = []
        for i in range(self.n):
            for k in range(r.indptr[i], r.indptr[i + 1]):
                out.append((self.labels[i], self.labels[r.indices[k]], float(r.data[k])))
        return out

    def matrix(self) -> sp.csr_matrix:
        """Full sparse Q-matrix including the diagonal."""
        return (self._rates + sp.diags(self.diag)).tocsr()

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()

    def __eq__(self, other):
        if not isinstance(other, Generator):
            return NotImplemented
        a, b = self._rates, other._rates
        return (
            self.labels == other.labels
            and self.conservative == other.conservative
            and np.array_equal(self.diag, other.diag)
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    __hash__ = None

    def __repr__(self):
        kind = "conservative" if self.conservative else "non-conservative"
        return f"Generator(n={self.n}, nnz={self._rates.nnz}, {kind})"


@dataclass(frozen=True)
class JumpKernel:
    """Embedded jump chain: p(x, z) = a(x, z) / (-a(x, x)) and the per-jump escape mass."""

    states: StateSpace
    probs: sp.csr_matrix
    defect: np.ndarray

    def prob(self, x, z) -> float:
        return float(self.probs[self.states.position(x), self.states.position(z)])


@dataclass(frozen=True, eq=False)
class TabooSet:
    """Forbidden states.

    Members keep the order they were given (it fixes reduction traces), but
    equality and hashing ignore order.
    """

    members: tuple[str, ...] = ()

    def __post_init__(self):
        seen = []
        for m in self.members:
            m = str(m)
            if m not in seen:
                seen.append(m)
        object.__setattr__(self, "members", tuple(seen))

    @classmethod
    def of(cls, members=None):
        if members is None:
            return cls()
        if isinstance(members, TabooSet):
            return members
        if isinstance(members, str):
            members = [s for s in members.split(",") if s]
        return cls(tuple(members))

    def __eq__(self, other):
        if not isinstance(other, TabooSet):
            return NotImplemented
        return frozenset(self.members) == frozenset(other.members)

    def __hash__(self):
        return hash(frozenset(self.members))

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, label):
        return label in self.members

    def __bool__(self):
        return bool(self.members)

    def without(self, label) -> "TabooSet":
        return TabooSet(tuple(m for m in self.members if m != label))

    def with_state(self, label) -> "TabooSet":
        return TabooSet(self.members + (str(label),))

    def mask(self, states: StateSpace) -> np.ndarray:
        m = np.zeros(len(states), dtype=bool)
        for s in self.members:
            m[states.position(s)] = True
        return m

    def check(self, states: StateSpace) -> "TabooSet":
        for s in self.members:
            states.position(s)
        return self


@dataclass(frozen=True)
class HittingQuery:
    """Start state, target state and taboo set of a hitting question.

    Build it with :meth:`normalized` to drop the target from the taboo; a
    visit to the target ends the question before any taboo check applies.
    """

    source: str
    target: str
    taboo: TabooSet = TabooSet()

    @classmethod
    def normalized(cls, source, target, taboo=None) -> "HittingQuery":
        h = TabooSet.of(taboo)
        return cls(str(source), str(target), h.without(str(target)))

    @property
    def was_normalized(self) -> bool:
        return self.target not in self.taboo

    def check(self, gen: Generator) -> "HittingQuery":
        gen.states.position(self.source)
        gen.states.position(self.target)
        self.taboo.check(gen.states)
        if self.target in self.taboo:
            raise ChainError("target lies in the taboo set; use HittingQuery.normalized")
        return self


# ---------------------------------------------------------------------------
# parsing and formatting


def _parse_float(tok, lineno):
    try:
        return float(tok)
    except ValueError:
        raise ChainError(f"line {lineno}: cannot parse number {tok!r}") from None


def parse_chain(text: str) -> Generator:
    """Parse chain-file text into a validated :class:`Generator`.

    Raises
    ------
    ChainError
        Duplicate or unknown states, malformed lines, negative rates,
        non-negative diagonals, or row-sum violations.
    """
    states = None
    conservative = None
    triples = {}
    diag = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if not sep:
            raise ChainError(f"line {lineno}: expected 'key: value', got {raw.strip()!r}")
        key = key.strip()
        toks = rest.split()
        if key == "states":
            if states is not None:
                raise ChainError(f"line {lineno}: repeated states header")
            states = StateSpace(tuple(toks))
        elif key == "conservative":
            if conservative is not None:
                raise ChainError(f"line {lineno}: repeated conservative line")
            if len(toks) != 1 or toks[0].lower() not in ("true", "false"):
                raise ChainError(f"line {lineno}: conservative must be true or false")
            conservative = toks[0].lower() == "true"
        elif key == "rate":
            if states is None:
                raise ChainError(f"line {lineno}: rate before states header")
            if len(toks) != 3:
                raise ChainError(f"line {lineno}: rate needs <from> <to> <value>")
            x, y, v = toks
            for s in (x, y):
                if s not in states:
                    raise ChainError(f"line {lineno}: unknown state {s!r}")
            if x == y:
                raise ChainError(f"line {lineno}: self-rate for {x!r}; use a diag line")
            v = _parse_float(v, lineno)
            if v < 0:
                raise ChainError(f"line {lineno}: negative rate {v} from {x!r} to {y!r}")
            if (x, y) in triples:
                raise ChainError(f"line {lineno}: duplicate rate {x!r} -> {y!r}")
            triples[(x, y)] = v
        elif key == "diag":
            if states is None:
                raise ChainError(f"line {lineno}: diag before states header")
            if len(toks) != 2:
                raise ChainError(f"line {lineno}: diag needs <state> <value>")
            x, v = toks
            if x not in states:
                raise ChainError(f"line {lineno}: unknown state {x!r}")
            if x in diag:
                raise ChainError(f"line {lineno}: duplicate diag for {x!r}")
            diag[x] = _parse_float(v, lineno)
        else:
            raise ChainError(f"line {lineno}: unknown key {key!r}")
    if states is None:
        raise ChainError("missing states header")
    if conservative is None:
        raise ChainError("missing conservative line")
    return Generator.from_triples(
        states,
        [(x, y, v) for (x, y), v in triples.items()],
        diag=diag or None,
        conservative=conservative,
    )


def format_chain(gen: Generator) -> str:
    """Canonical chain-file text.

    Conservative chains omit diagonal lines (they are re-derived on parsing);
    others list every diagonal.  Floats use their shortest round-trip repr,
    so ``parse_chain(format_chain(g)) == g``.
    """
    lines = [
        "states: " + " ".join(gen.labels),
        "conservative: " + ("true" if gen.conservative else "false"),
    ]
    lines += [f"rate: {x} {y} {v!r}" for x, y, v in gen.triples()]
    if not gen.conservative:
        lines += [f"diag: {x} {float(d)!r}" for x, d in zip(gen.labels, gen.diag)]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# structural queries


@dataclass(frozen=True)
class ValidationReport:
    irreducible: bool
    conservative: bool
    defective_rows: tuple[str, ...]
    n_components: int
    findings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.irreducible


def validate(gen: Generator) -> ValidationReport:
    """Irreducibility and per-row conservativeness findings; never raises."""
    ncomp, _ = csgraph.connected_components(gen._rates, directed=True, connection="strong")
    defective = tuple(s for s, leak in zip(gen.labels, gen.leaky) if leak)
    findings = [
        f"states={gen.n}",
        f"rates={gen._rates.nnz}",
        f"conservative={'true' if gen.conservative else 'false'}",
        f"irreducible={'true' if ncomp == 1 else 'false'}",
    ]
    if ncomp > 1:
        findings.append(f"strongly connected components={ncomp}")
    if defective:
        findings.append("defective rows: " + " ".join(defective))
    return ValidationReport(ncomp == 1, gen.conservative, defective, int(ncomp), tuple(findings))


def embedded_chain(gen: Generator) -> JumpKernel:
    """Jump-chain kernel of ``gen``; conservative rows get zero defect."""
    q = gen.exit_rates
    probs = sp.diags(1.0 / q) @ gen._rates
    probs = sp.csr_matrix(probs)
    probs.sort_indices()
    defect = np.where(gen.leaky, gen.defect / q, 0.0)
    return JumpKernel(gen.states, probs, defect)


def restrict(gen: Generator, taboo) -> Generator:
    """Sub-generator on ``S \\ H``; diagonals unchanged, mass into ``H`` becomes defect."""
    h = TabooSet.of(taboo).check(gen.states)
    if not h:
        return gen
    keep = ~h.mask(gen.states)
    if not keep.any():
        raise ChainError("taboo set covers every state")
    idx = np.flatnonzero(keep)
    sub = gen._rates[idx][:, idx]
    labels = [gen.labels[i] for i in idx]
    return Generator(labels, sub, diag=gen.diag[idx].copy())


def exit_time_cdf(gen: Generator, x, t: float) -> float:
    """P_x(first exit from x <= t) = 1 - exp(a(x,x) t)."""
    if t < 0 or math.isnan(t):
        raise ValueError(f"time must be non-negative, got {t}")
    a = gen.diag[gen.states.position(x)]
    if math.isinf(t):
        return 1.0
    return float(-math.expm1(a * t))
