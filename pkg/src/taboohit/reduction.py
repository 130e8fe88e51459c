"""Iterative taboo reduction.

Two identities move between taboo sets that differ by one state:

* adding ``z`` to a nonempty taboo ``H`` (``y, z`` outside ``H``, ``z != y``)::

      F_{H+z}(x, y) = (F_H(x, y) - F_H(x, z) F_H(z, y)) / (1 - F_H(y, z) F_H(z, y))

* removing the start state ``x`` from the taboo (``x`` outside ``H``, ``x != y``)::

      F_H(x, y) = F_{H+x}(x, y) / (1 - F_{H+y}(x, x))

:func:`reduce_to_singleton` chains the first identity so that any finite
taboo set is handled from one-state taboo values, recording every step.
"""

from dataclasses import dataclass

from .chain import Generator, HittingQuery, TabooSet
from .errors import DenominatorError
from .green import green_function, taboo_green
from .probability import (
    HittingResult,
    Method,
    checked_probability,
    hitting_prob_green_ratio,
    hitting_prob_singleton_transient,
    normalize_query,
)

__all__ = [
    "DENOMINATOR_MIN",
    "ReductionStep",
    "expand_taboo_value",
    "remove_start_value",
    "add_taboo",
    "remove_start_taboo",
    "reduce_to_singleton",
    "format_trace",
]

DENOMINATOR_MIN = 1e-14


@dataclass(frozen=True)
class ReductionStep:
    """One application of a taboo identity.

    ``action`` is ``"add"`` (with ``state`` the added taboo state),
    ``"remove_start"`` or ``"base"`` (a one-state taboo value computed
    directly; ``inputs`` is then empty).
    """

    action: str
    state: str
    inputs: tuple
    output: tuple

    @property
    def value(self):
        return self.output[1]


def expand_taboo_value(f_xy, f_xz, f_zy, f_yz):
    """Hitting probability after adding one state to the taboo set."""
    side = f_yz * f_zy
    denom = 1.0 - side
    if not denom > DENOMINATOR_MIN:
        raise DenominatorError(
            f"taboo-expansion denominator 1 - F(y,z)F(z,y) = {denom:.3g}; "
            "F(y,z)F(z,y) must stay below 1",
            "taboo-expansion denominator",
        )
    return checked_probability((f_xy - f_xz * f_zy) / denom, what="expanded-taboo probability")


def remove_start_value(f_xy_start_taboo, f_xx_target_taboo):
    """Hitting probability once the start state is no longer taboo."""
    denom = 1.0 - f_xx_target_taboo
    if not denom > DENOMINATOR_MIN:
        raise DenominatorError(
            f"start-removal denominator 1 - F(x,x) = {denom:.3g}",
            "start-removal denominator",
        )
    return checked_probability(f_xy_start_taboo / denom, what="start-removed probability")


def _lookup(values, x, y, taboo):
    key = HittingQuery(str(x), str(y), TabooSet.of(taboo))
    try:
        return key, values[key]
    except KeyError:
        raise KeyError(f"missing value for {x}->{y} under taboo {{{','.join(key.taboo)}}}") from None


def add_taboo(x, y, z, taboo, values):
    """Apply the taboo-expansion identity with inputs looked up in ``values``.

    Parameters
    ----------
    x, y, z : str
        Start, target and the state being added to the taboo.
    taboo : TabooSet
        Nonempty current taboo ``H``; ``y`` and ``z`` must lie outside it.
    values : mapping of HittingQuery -> float
        Must hold ``F_H`` for ``(x, y)``, ``(x, z)``, ``(z, y)`` and ``(y, z)``.

    Returns
    -------
    float
        ``F_{H+z}(x, y)``.
    """
    h = TabooSet.of(taboo)
    x, y, z = str(x), str(y), str(z)
    if not h:
        raise ValueError("taboo expansion needs a nonempty starting taboo set")
    if y in h or z in h:
        raise ValueError("target and added state must lie outside the taboo set")
    if z == y:
        raise ValueError("added taboo state must differ from the target")
    f_xy = _lookup(values, x, y, h)[1]
    f_xz = _lookup(values, x, z, h)[1]
    f_zy = _lookup(values, z, y, h)[1]
    f_yz = _lookup(values, y, z, h)[1]
    return expand_taboo_value(f_xy, f_xz, f_zy, f_yz)


def remove_start_taboo(x, y, taboo, values):
    """Apply the start-removal identity with inputs looked up in ``values``.

    ``values`` must hold ``F_{H+x}(x, y)`` and ``F_{H+y}(x, x)``.
    """
    h = TabooSet.of(taboo)
    x, y = str(x), str(y)
    if x in h:
        raise ValueError("start state must lie outside the taboo set")
    if x == y:
        raise ValueError("start and target must differ")
    f_xy = _lookup(values, x, y, h.with_state(x))[1]
    f_xx = _lookup(values, x, x, h.with_state(y))[1]
    if f_xx >= 1.0:
        raise DenominatorError("return probability under the enlarged taboo is not below 1", "start-removal denominator")
    return remove_start_value(f_xy, f_xx)


def reduce_to_singleton(gen: Generator, query, order=None, base="theorem1") -> HittingResult:
    """Compute a finite-taboo hitting probability from one-state taboo values.

    Taboo states are added one at a time in ``order`` (default: the order
    of the query's taboo set).  Every intermediate value, one-state base
    values included, is recorded in the returned trace; steps only consume
    values produced by earlier steps.

    ``base`` selects how one-state taboo values are obtained: ``"theorem1"``
    (taboo Green ratio, any chain) or ``"theorem3"`` (Green-function
    formulas, transient chains only).

    Raises
    ------
    DenominatorError
        With a ``trace`` attribute holding the steps completed so far.
    """
    q = normalize_query(gen, query)
    members = tuple(order) if order is not None else q.taboo.members
    if TabooSet.of(members) != q.taboo or len(set(members)) != len(members):
        raise ValueError("order must be a permutation of the taboo set")
    if not members:
        raise ValueError("reduction needs a nonempty taboo set")
    levels = [TabooSet(members[:j]) for j in range(1, len(members) + 1)]
    steps = []
    memo = {}

    if base == "theorem1":
        times = taboo_green(gen, levels[0])

        def base_value(a, b):
            return hitting_prob_green_ratio(gen, HittingQuery(a, b, levels[0]), times=times).value

    elif base == "theorem3":
        green = green_function(gen)

        def base_value(a, b):
            return hitting_prob_singleton_transient(gen, a, b, members[0], green=green).value

    else:
        raise ValueError(f"unknown base route {base!r}")

    def value(j, a, b):
        key = HittingQuery(a, b, levels[j])
        if key in memo:
            return memo[key]
        if j == 0:
            v = base_value(a, b)
            steps.append(ReductionStep("base", members[0], (), (key, v)))
        else:
            z = members[j]
            prev = levels[j - 1]
            vals = {}
            for s, t in ((a, b), (a, z), (z, b), (b, z)):
                vals[HittingQuery(s, t, prev)] = value(j - 1, s, t)
            v = add_taboo(a, b, z, prev, vals)
            steps.append(ReductionStep("add", z, tuple(vals.items()), (key, v)))
        memo[key] = v
        return v

    try:
        v = value(len(members) - 1, q.source, q.target)
    except DenominatorError as exc:
        exc.trace = tuple(steps)
        raise
    strict = q.source == q.target
    v = checked_probability(v, strict=strict, what="reduced probability")
    return HittingResult(q, v, Method.REDUCTION, trace=tuple(steps))


def format_trace(steps) -> str:
    """One line per step: ``step <i>: <action> z=<label> value=<v> ...``."""
    lines = []
    for i, st in enumerate(steps, start=1):
        key, v = st.output
        lines.append(
            f"step {i}: {st.action} z={st.state} value={v:.12f} "
            f"from={key.source} to={key.target} taboo={','.join(key.taboo)}"
        )
    return "\n".join(lines)
