"""Independent checks: seeded trajectory simulation and value iteration.

Random numbers come from the Philox-4x32-10 counter-based generator.  Every
draw is a pure function of ``(seed, trial, jump index)``, so a batch of
trials can be advanced in lockstep with numpy and the result does not depend
on how trials are ordered or split.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .chain import Generator, HittingQuery, TabooSet, embedded_chain
from .errors import ProbabilityRangeError

__all__ = [
    "HORIZON_FACTOR",
    "philox4x32",
    "uniform_pairs",
    "Terminal",
    "TrajectorySample",
    "Estimate",
    "default_horizon",
    "simulate_trajectory",
    "estimate_hitting",
    "estimate_hitting_after_exit",
    "ValueIterationResult",
    "value_iteration_hitting",
]

HORIZON_FACTOR = 2000.0

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_32 = np.uint64(32)


def philox4x32(counter, key, rounds=10):
    """Philox-4x32 block function.

    Parameters
    ----------
    counter : (4, m) array of uint32-valued integers
    key : pair of uint32-valued integers

    Returns
    -------
    (4, m) uint64 array holding 32-bit outputs.
    """
    c = [np.asarray(w, dtype=np.uint64) & _MASK for w in counter]
    k0 = np.uint64(int(key[0]) & 0xFFFFFFFF)
    k1 = np.uint64(int(key[1]) & 0xFFFFFFFF)
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c[0]
        p1 = _M1 * c[2]
        c = [
            (p1 >> _32) ^ c[1] ^ k0,
            p1 & _MASK,
            (p0 >> _32) ^ c[3] ^ k1,
            p0 & _MASK,
        ]
    return np.stack(c)


def _to_unit(hi, lo):
    # 53-bit uniform in [0, 1)
    return ((hi >> np.uint64(5)).astype(np.float64) * 67108864.0 + (lo >> np.uint64(6)).astype(np.float64)) * (
        1.0 / 9007199254740992.0
    )


def uniform_pairs(seed, trials, steps):
    """Two independent U[0,1) draws for each ``(trial, jump index)`` pair.

    ``trials`` and ``steps`` broadcast against each other.
    """
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    trials, steps = np.broadcast_arrays(
        np.asarray(trials, dtype=np.uint64), np.asarray(steps, dtype=np.uint64)
    )
    counter = (steps & _MASK, trials & _MASK, trials >> _32, steps >> _32)
    w = philox4x32(counter, (seed & 0xFFFFFFFF, seed >> 32))
    return _to_unit(w[0], w[1]), _to_unit(w[2], w[3])


class _JumpTable:
    """Vectorized sampling from the jump kernel; index ``-1`` means escape."""

    def __init__(self, gen):
        k = embedded_chain(gen)
        p = k.probs
        self.indptr = p.indptr
        self.indices = p.indices
        rows = np.repeat(np.arange(gen.n), np.diff(p.indptr))
        cum = np.cumsum(p.data)
        starts = np.concatenate(([0.0], cum))[p.indptr[:-1]]
        local = cum - np.repeat(starts, np.diff(p.indptr))
        # close conservative rows exactly so rounding never fakes an escape
        last = p.indptr[1:] - 1
        closed = (~gen.leaky) & (np.diff(p.indptr) > 0)
        local[last[closed]] = 1.0
        self.cum = rows + local
        self.rates = gen.exit_rates

    def draw(self, cur, u):
        lo = self.indptr[cur]
        hi = self.indptr[cur + 1]
        idx = np.searchsorted(self.cum, cur + u, side="right")
        idx = np.maximum(idx, lo)
        nxt = np.full(cur.size, -1, dtype=np.int64)
        ok = idx < hi
        nxt[ok] = self.indices[idx[ok]]
        return nxt


@dataclass(frozen=True)
class Terminal:
    """How a trajectory ended: ``hit_target``, ``hit_taboo``, ``escaped`` or ``horizon``."""

    kind: str
    time: float = None


@dataclass(frozen=True)
class TrajectorySample:
    seed: int
    trial: int
    jumps: tuple
    terminal: Terminal


@dataclass(frozen=True)
class Estimate:
    """Monte-Carlo estimate of a hitting probability.

    ``horizon_censored`` trials were undecided at the horizon and count as
    failures, so the mean is biased low when it is nonzero.  The after-exit
    estimator also fills ``zero_atom`` (fraction of trials whose first jump
    lands on the target) and its standard error.
    """

    mean: float
    stderr: float
    trials: int
    horizon_censored: int
    zero_atom: float = None
    zero_atom_stderr: float = None
    hits: int = field(default=0, repr=False)


def _stderr(p, n):
    return float(np.sqrt(p * (1.0 - p) / n))


def default_horizon(gen: Generator) -> float:
    """``HORIZON_FACTOR`` times the longest mean holding time of ``gen``."""
    return HORIZON_FACTOR / float(gen.exit_rates.min())


def simulate_trajectory(gen: Generator, source, seed, horizon, trial=0, block=256):
    """Raw trajectory from ``source`` until the horizon or a boundary escape.

    Uses the same random stream as trial ``trial`` of the estimators, so the
    estimator's verdict for that trial can be read off this path.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    table = _JumpTable(gen)
    cur = gen.states.position(source)
    t = 0.0
    jumps = [(0.0, gen.labels[cur])]
    step = 0
    while True:
        steps = np.arange(step, step + block, dtype=np.uint64)
        hold_u, jump_u = uniform_pairs(seed, trial, steps)
        for h, j in zip(hold_u, jump_u):
            t_next = t - np.log1p(-h) / table.rates[cur]
            if t_next > horizon:
                return TrajectorySample(int(seed), int(trial), tuple(jumps), Terminal("horizon"))
            nxt = int(table.draw(np.array([cur]), np.array([j]))[0])
            t = float(t_next)
            if nxt < 0:
                return TrajectorySample(int(seed), int(trial), tuple(jumps), Terminal("escaped", t))
            cur = nxt
            jumps.append((t, gen.labels[cur]))
        step += block


_ACTIVE, _HIT, _TABOO, _ESCAPED, _CENSORED = range(5)


def _run_trials(gen, query, trials, seed, horizon, after_exit):
    """Advance all trials in lockstep; return per-trial status and first-jump flags."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    q = query if isinstance(query, HittingQuery) else HittingQuery.normalized(*query)
    q = q.check(gen)
    if horizon is None:
        horizon = default_horizon(gen)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    table = _JumpTable(gen)
    iy = gen.states.position(q.target)
    in_h = q.taboo.mask(gen.states)

    status = np.full(trials, _ACTIVE, dtype=np.int8)
    first_on_target = np.zeros(trials, dtype=bool)
    alive = np.arange(trials, dtype=np.int64)
    cur = np.full(trials, gen.states.position(q.source), dtype=np.int64)
    clock = np.zeros(trials)
    exit_time = np.zeros(trials)
    step = 0
    while alive.size:
        hold_u, jump_u = uniform_pairs(seed, alive.astype(np.uint64), step)
        c = cur[alive]
        t_new = clock[alive] - np.log1p(-hold_u) / table.rates[c]
        if after_exit:
            if step == 0:
                exit_time[alive] = t_new
                late = np.zeros(alive.size, dtype=bool)
            else:
                late = t_new - exit_time[alive] > horizon
        else:
            late = t_new > horizon
        nxt = table.draw(c, jump_u)
        if step == 0:
            first_on_target[alive] = nxt == iy
        new_status = np.full(alive.size, _ACTIVE, dtype=np.int8)
        new_status[nxt < 0] = _ESCAPED
        landed = nxt >= 0
        new_status[landed & in_h[np.where(landed, nxt, 0)]] = _TABOO
        new_status[nxt == iy] = _HIT
        new_status[late] = _CENSORED
        status[alive] = new_status
        clock[alive] = t_new
        cur[alive] = nxt
        alive = alive[new_status == _ACTIVE]
        step += 1
    return q, status, first_on_target


def estimate_hitting(gen: Generator, query, trials=100_000, seed=0, horizon=None) -> Estimate:
    """Fraction of simulated paths that reach the target before the taboo set.

    The taboo set is only checked after the first jump, so a start state in
    the taboo set does not fail a trial.  Escapes through a truncation
    boundary fail the trial; paths undecided at ``horizon`` are censored and
    counted as failures.
    """
    q, status, _ = _run_trials(gen, query, trials, seed, horizon, after_exit=False)
    hits = int(np.count_nonzero(status == _HIT))
    mean = hits / trials
    return Estimate(mean, _stderr(mean, trials), trials, int(np.count_nonzero(status == _CENSORED)), hits=hits)


def estimate_hitting_after_exit(gen: Generator, query, trials=100_000, seed=0, horizon=None) -> Estimate:
    """Like :func:`estimate_hitting` with the clock started at the first exit.

    The success event is the same; only censoring is measured from the
    first jump.  Also reports how often the first jump lands on the target,
    which is the probability that the post-exit hitting time is zero.
    """
    q, status, first = _run_trials(gen, query, trials, seed, horizon, after_exit=True)
    hits = int(np.count_nonzero(status == _HIT))
    mean = hits / trials
    atom = float(np.count_nonzero(first)) / trials
    return Estimate(
        mean,
        _stderr(mean, trials),
        trials,
        int(np.count_nonzero(status == _CENSORED)),
        zero_atom=atom,
        zero_atom_stderr=_stderr(atom, trials),
        hits=hits,
    )


@dataclass(frozen=True)
class ValueIterationResult:
    labels: tuple
    values: np.ndarray
    iterations: int
    converged: bool

    def __getitem__(self, label):
        return float(self.values[self.labels.index(str(label))])


def value_iteration_hitting(gen: Generator, target, taboo=None, tol=1e-12, max_iter=10**6):
    """Iterate the one-jump map from zero towards the minimal hitting probabilities.

    Every sweep is checked to be nondecreasing and bounded by one.  On
    hitting ``max_iter`` the last iterate is returned with
    ``converged=False``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    target = str(target)
    iy = gen.states.position(target)
    h = TabooSet.of(taboo).without(target).check(gen.states)
    keep = ~h.mask(gen.states)
    keep[iy] = False
    p = embedded_chain(gen).probs
    to_y = np.asarray(p[:, [iy]].todense()).ravel()
    to_y[iy] = 0.0
    p_free = sp.csr_matrix(p @ sp.diags(keep.astype(float)))
    vals = np.zeros(gen.n)
    converged = False
    it = 0
    while it < max_iter:
        new = to_y + p_free @ vals
        it += 1
        if np.any(new < vals - 1e-14) or np.any(new > 1.0 + 1e-12):
            raise ProbabilityRangeError("value iteration lost monotonicity or left [0, 1]", "value iteration")
        change = float(np.max(np.abs(new - vals)))
        vals = new
        if change <= tol:
            converged = True
            break
    vals = np.minimum(vals, 1.0)
    vals.flags.writeable = False
    return ValueIterationResult(gen.labels, vals, it, converged)
