"""Probability that the hitting time of a target under a taboo set is finite.

Several independent closed-form and linear-algebra routes compute the same
number; :func:`hitting_probability` dispatches between them and
:func:`cross_check` runs every applicable route on one query.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .chain import Generator, HittingQuery, TabooSet, validate
from .errors import DenominatorError, NumericalDegeneracy, ProbabilityRangeError
from .green import (
    RESIDUAL_TOL,
    LinearSolver,
    can_reach,
    green_function,
    is_recurrent,
    taboo_green,
)

__all__ = [
    "RANGE_SLACK",
    "Method",
    "HittingResult",
    "FirstStepSolution",
    "checked_probability",
    "normalize_query",
    "hitting_prob_green_ratio",
    "hitting_prob_first_step",
    "hitting_prob_no_taboo",
    "hitting_prob_singleton_transient",
    "hitting_probability",
    "cross_check",
]

RANGE_SLACK = 1e-9


class Method(str, Enum):
    """Route that produced a hitting probability; values are the CLI tokens."""

    GREEN_RATIO = "theorem1"
    FIRST_STEP = "firststep"
    TRANSIENT_SINGLETON = "theorem3"
    BASE = "base"
    REDUCTION = "reduce"
    VALUE_ITERATION = "vi"
    MONTE_CARLO = "mc"


@dataclass(frozen=True)
class HittingResult:
    query: HittingQuery
    value: float
    method: Method
    trace: tuple = ()


def checked_probability(value, strict=False, what="probability"):
    """Clamp ``value`` into [0, 1] after checking it lies within ``RANGE_SLACK``.

    With ``strict`` the clamped value must also be below one.
    """
    v = float(value)
    if not np.isfinite(v) or v < -RANGE_SLACK or v > 1 + RANGE_SLACK:
        raise ProbabilityRangeError(f"{what} = {v!r} outside [0, 1]", "range")
    v = min(max(v, 0.0), 1.0)
    if strict and v >= 1.0:
        raise ProbabilityRangeError(f"{what} = {v!r} must be below 1", "range")
    return v


def normalize_query(gen: Generator, query) -> HittingQuery:
    """Drop the target from the taboo set and check every label against ``gen``."""
    if not isinstance(query, HittingQuery):
        query = HittingQuery.normalized(*query)
    elif query.target in query.taboo:
        query = HittingQuery.normalized(query.source, query.target, query.taboo)
    return query.check(gen)


def hitting_prob_green_ratio(gen: Generator, query, times=None) -> HittingResult:
    """Hitting probability as a ratio of taboo Green function entries.

    For ``x != y`` the value is ``P_H(x, y) / P_H(y, y)``; for ``x == y`` it
    is ``1 + 1 / (a(x, x) P_H(x, x))``.  ``times`` may carry a precomputed
    :class:`~taboohit.green.OccupationTimes` for the same taboo set.
    """
    q = normalize_query(gen, query)
    if not q.taboo:
        raise ValueError("the Green-ratio route needs a nonempty taboo set")
    if times is None:
        times = taboo_green(gen, q.taboo)
    elif times.taboo != q.taboo:
        raise ValueError("precomputed occupation times belong to another taboo set")
    col = times.column(q.target)
    ix, iy = gen.states.position(q.source), gen.states.position(q.target)
    if ix != iy:
        value = checked_probability(col[ix] / col[iy], what=f"F({q.source}->{q.target})")
    else:
        value = checked_probability(
            1.0 + 1.0 / (gen.diag[ix] * col[ix]), strict=True, what=f"F({q.source}->{q.source})"
        )
    return HittingResult(q, value, Method.GREEN_RATIO)


@dataclass(frozen=True)
class FirstStepSolution:
    """Hitting probabilities of one target from every start state.

    ``minimal`` records that the minimal nonnegative solution was selected
    (recurrent empty-taboo case, or start states that never reach the
    target); ``residual`` is the max violation of the one-jump equations.
    """

    labels: tuple
    target: str
    taboo: TabooSet
    values: np.ndarray
    minimal: bool
    residual: float

    def __getitem__(self, label):
        return float(self.values[self.labels.index(str(label))])


def _jump_matrix(gen):
    return sp.csr_matrix(sp.diags(1.0 / gen.exit_rates) @ gen._rates)


def hitting_prob_first_step(gen: Generator, target, taboo=None) -> FirstStepSolution:
    """Solve the one-jump equations for all start states simultaneously.

    With ``p`` the jump kernel, the unknowns satisfy::

        F(x) = [x != y] p(x, y) + sum_{z not in H, z != x, z != y} p(x, z) F(z)

    for every state ``x``.  Start states that cannot reach the target get
    zero, which picks out the minimal nonnegative solution whenever the
    system on ``S \\ (H + {y})`` is singular; the rest is solved directly.
    """
    target = str(target)
    iy = gen.states.position(target)
    h = TabooSet.of(taboo).without(target).check(gen.states)
    in_h = h.mask(gen.states)
    unknown = ~in_h
    unknown[iy] = False
    u_idx = np.flatnonzero(unknown)

    p = _jump_matrix(gen)
    p_u = p[:, u_idx]
    to_y = np.asarray(p[:, [iy]].todense()).ravel()
    to_y[iy] = 0.0

    sub = p_u[u_idx]
    b = to_y[u_idx]
    into_h = np.asarray(p[u_idx][:, np.flatnonzero(in_h)].sum(axis=1)).ravel() > 0
    escapes = can_reach(sub, (b > 0) | into_h | gen.leaky[u_idx])
    reaches_y = can_reach(sub, b > 0)
    minimal = (gen.conservative and not h) or not escapes.all()

    f_u = np.zeros(u_idx.size)
    live = np.flatnonzero(reaches_y)
    if live.size:
        a = sp.identity(live.size, format="csr") - sub[live][:, live]
        solver = LinearSolver(a, "one-jump hitting system", "first-step")
        f_u[live] = solver.solve(b[live])

    values = np.zeros(gen.n)
    values[u_idx] = f_u
    # start states outside the unknowns: the target itself and taboo states
    rest = np.flatnonzero(~unknown)
    values[rest] = to_y[rest] + p_u[rest] @ f_u

    resid = values - (to_y + p_u @ f_u)
    residual = float(np.max(np.abs(resid))) if resid.size else 0.0
    if residual > RESIDUAL_TOL:
        raise NumericalDegeneracy(
            f"one-jump equations: residual {residual:.3g} exceeds {RESIDUAL_TOL:g}", "first-step"
        )
    strict_y = bool(h) or not gen.conservative
    strict_y = strict_y and validate(gen).irreducible
    for i in range(gen.n):
        values[i] = checked_probability(
            values[i],
            strict=strict_y and i == iy,
            what=f"F({gen.labels[i]}->{target})",
        )
    values.flags.writeable = False
    return FirstStepSolution(gen.labels, target, h, values, bool(minimal), residual)


def hitting_prob_no_taboo(gen: Generator, source, target) -> HittingResult:
    """Empty-taboo hitting probability.

    Recurrent chains hit every state with certainty.  Otherwise, with Green
    function ``G``, the value is ``G(x, y) / G(y, y)`` for ``x != y`` and
    ``1 + 1 / (a(x, x) G(x, x))`` for a return to ``x``.
    """
    q = normalize_query(gen, (source, target, None))
    if is_recurrent(gen):
        return HittingResult(q, 1.0, Method.BASE)
    g = green_function(gen)
    col = g.column(q.target)
    ix, iy = gen.states.position(q.source), gen.states.position(q.target)
    if ix != iy:
        value = checked_probability(col[ix] / col[iy], what=f"F({source}->{target})")
    else:
        value = checked_probability(
            1.0 + 1.0 / (gen.diag[ix] * col[ix]), strict=True, what=f"F({source}->{source})"
        )
    return HittingResult(q, value, Method.BASE)


def hitting_prob_singleton_transient(gen: Generator, source, target, taboo_state, green=None):
    """Hitting probability under a one-state taboo from Green function entries alone.

    Valid for transient (non-conservative) generators.  With ``x`` the
    start, ``y`` the target, ``z`` the taboo state and
    ``D = G(y,y) G(z,z) - G(y,z) G(z,y)``::

        x != y, x != z:  (G(x,y) G(z,z) - G(x,z) G(z,y)) / D
        x == y:          1 + G(z,z) / (a(y,y) D)
        x == z:          -G(z,y) / (a(z,z) D)

    Raises
    ------
    DenominatorError
        If ``D`` is not positive (relative to ``G(y,y) G(z,z)``).
    """
    x, y, z = str(source), str(target), str(taboo_state)
    if z == y:
        raise ValueError("taboo state must differ from the target")
    if gen.conservative:
        raise ValueError("Green-function formulas need a transient (non-conservative) chain")
    q = normalize_query(gen, (x, y, (z,)))
    if green is None:
        green = green_function(gen)
    cy, cz = green.column(y), green.column(z)
    pos = gen.states.position
    ix, iy, iz = pos(x), pos(y), pos(z)
    gyy, gzz, gyz, gzy = cy[iy], cz[iz], cz[iy], cy[iz]
    denom = gyy * gzz - gyz * gzy
    if not denom > 1e-14 * gyy * gzz:
        raise DenominatorError(
            f"Green determinant G(y,y)G(z,z)-G(y,z)G(z,y) = {denom:.3g} is not positive",
            "transient singleton denominator",
        )
    if ix == iy:
        value = 1.0 + gzz / (gen.diag[iy] * denom)
    elif ix == iz:
        value = -gzy / (gen.diag[iz] * denom)
    else:
        value = (cy[ix] * gzz - cz[ix] * gzy) / denom
    # a return is certain only on a recurrent chain; other pairs can reach 1
    value = checked_probability(value, strict=ix == iy, what=f"F_{z}({x}->{y})")
    return HittingResult(q, value, Method.TRANSIENT_SINGLETON)


def hitting_probability(gen: Generator, source, target, taboo=None, method=None, **options):
    """Hitting probability of ``target`` from ``source`` avoiding ``taboo``.

    ``method`` is a :class:`Method` or its token; the default is the Green
    ratio for a nonempty taboo and the empty-taboo formulas otherwise.
    Extra keyword options go to the Monte-Carlo (``trials``, ``seed``,
    ``horizon``), value-iteration (``tol``, ``max_iter``) and reduction
    (``order``) routes.
    """
    q = normalize_query(gen, (source, target, taboo))
    if method is None:
        method = Method.GREEN_RATIO if q.taboo else Method.BASE
    method = Method(method)

    if method is Method.GREEN_RATIO:
        return hitting_prob_green_ratio(gen, q)
    if method is Method.BASE:
        if q.taboo:
            raise ValueError("the empty-taboo route was asked for a nonempty taboo set")
        return hitting_prob_no_taboo(gen, q.source, q.target)
    if method is Method.FIRST_STEP:
        sol = hitting_prob_first_step(gen, q.target, q.taboo)
        return HittingResult(q, sol[q.source], Method.FIRST_STEP)
    if method is Method.TRANSIENT_SINGLETON:
        if len(q.taboo) != 1:
            raise ValueError("the transient singleton route needs exactly one taboo state")
        return hitting_prob_singleton_transient(gen, q.source, q.target, q.taboo.members[0])
    if method is Method.REDUCTION:
        from .reduction import reduce_to_singleton

        return reduce_to_singleton(gen, q, order=options.get("order"))
    if method is Method.VALUE_ITERATION:
        from .oracle import value_iteration_hitting

        vi = value_iteration_hitting(
            gen, q.target, q.taboo, tol=options.get("tol", 1e-12), max_iter=options.get("max_iter", 10**6)
        )
        if not vi.converged:
            raise NumericalDegeneracy("value iteration did not converge", "value iteration")
        return HittingResult(q, checked_probability(vi[q.source]), Method.VALUE_ITERATION)
    if method is Method.MONTE_CARLO:
        from .oracle import estimate_hitting

        est = estimate_hitting(
            gen,
            q,
            trials=options.get("trials", 100_000),
            seed=options.get("seed", 0),
            horizon=options.get("horizon"),
        )
        return HittingResult(q, est.mean, Method.MONTE_CARLO, trace=(est,))
    raise ValueError(f"unsupported method {method!r}")


def applicable_methods(gen: Generator, query) -> list:
    """Deterministic routes that apply to ``query`` on ``gen``."""
    q = normalize_query(gen, query)
    methods = []
    if q.taboo:
        methods.append(Method.GREEN_RATIO)
    else:
        methods.append(Method.BASE)
    methods.append(Method.FIRST_STEP)
    if len(q.taboo) == 1 and not gen.conservative:
        methods.append(Method.TRANSIENT_SINGLETON)
    if len(q.taboo) >= 2:
        methods.append(Method.REDUCTION)
    methods.append(Method.VALUE_ITERATION)
    return methods


def cross_check(gen: Generator, source, target, taboo=None, tol=1e-8):
    """Evaluate every deterministic route; return ``(results, max_spread, agree)``."""
    q = normalize_query(gen, (source, target, taboo))
    results = [hitting_probability(gen, q.source, q.target, q.taboo, m) for m in applicable_methods(gen, q)]
    values = [r.value for r in results]
    spread = max(values) - min(values)
    return results, spread, spread <= tol
