import numpy as np
import pytest

from taboohit import (
    Generator,
    HittingQuery,
    build_birth_death,
    build_cycle,
    estimate_hitting,
    estimate_hitting_after_exit,
    simulate_trajectory,
    value_iteration_hitting,
)
from taboohit.oracle import default_horizon, philox4x32, uniform_pairs


@pytest.mark.parametrize(
    "counter, key, expected",
    [
        ((0, 0, 0, 0), (0, 0), "6627e8d5 e169c58d bc57ac4c 9b00dbd8"),
        ((0xFFFFFFFF,) * 4, (0xFFFFFFFF, 0xFFFFFFFF), "408f276d 41c83b0e a20bc7c6 6d5451fd"),
        (
            (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
            (0xA4093822, 0x299F31D0),
            "d16cfe09 94fdcceb 5001e420 24126ea1",
        ),
    ],
)
def test_philox_known_answers(counter, key, expected):
    out = philox4x32([[w] for w in counter], key)[:, 0]
    assert " ".join(f"{int(w):08x}" for w in out) == expected


def test_uniforms_are_order_independent():
    a1, b1 = uniform_pairs(42, np.arange(10), 3)
    a2, b2 = uniform_pairs(42, np.arange(10)[::-1], 3)
    np.testing.assert_array_equal(a1, a2[::-1])
    np.testing.assert_array_equal(b1, b2[::-1])
    assert np.all((a1 >= 0) & (a1 < 1))


def test_uniforms_look_uniform():
    u, v = uniform_pairs(7, np.arange(200_000), 0)
    assert abs(u.mean() - 0.5) < 0.005
    assert abs(np.corrcoef(u, v)[0, 1]) < 0.01


def test_pure_death_trajectory_escapes(pure_death):
    s = simulate_trajectory(pure_death, "x", seed=5, horizon=1e9)
    assert s.terminal.kind == "escaped"
    assert s.jumps == ((0.0, "x"),)
    assert s.terminal.time > 0


def test_pure_death_exit_times_are_exponential(pure_death):
    times = [simulate_trajectory(pure_death, "x", seed=9, horizon=1e9, trial=i).terminal.time for i in range(4000)]
    # rate 2: mean 1/2, standard error 1/(2 sqrt(4000))
    assert abs(np.mean(times) - 0.5) < 4 * 0.5 / np.sqrt(4000)


def test_two_state_alternates():
    g = Generator.from_triples(["a", "b"], [("a", "b", 1.0), ("b", "a", 3.0)])
    s = simulate_trajectory(g, "a", seed=1, horizon=200.0)
    states = [st for _, st in s.jumps]
    assert len(states) > 50
    assert all(st == ("a" if i % 2 == 0 else "b") for i, st in enumerate(states))
    times = [t for t, _ in s.jumps]
    assert all(b > a for a, b in zip(times, times[1:]))
    assert s.terminal.kind == "horizon"


def test_trajectory_replay_is_identical(tri):
    a = simulate_trajectory(tri, "0", seed=123, horizon=50.0, trial=4)
    b = simulate_trajectory(tri, "0", seed=123, horizon=50.0, trial=4)
    assert a == b


def test_estimator_agrees_with_raw_paths(tri):
    q = HittingQuery.normalized("0", "1", ["2"])
    wins = 0
    for i in range(200):
        path = simulate_trajectory(tri, "0", seed=77, horizon=50.0, trial=i)
        first = path.jumps[1][1]
        wins += first == "1"
    est = estimate_hitting(tri, q, trials=200, seed=77)
    assert est.hits == wins


def test_complete_graph_estimate(tri):
    est = estimate_hitting(tri, HittingQuery.normalized("0", "1", ["2"]), trials=100_000, seed=11)
    assert abs(est.mean - 0.5) <= 3 * est.stderr
    assert est.stderr == pytest.approx(np.sqrt(est.mean * (1 - est.mean) / est.trials))


def test_no_return_estimate_is_zero():
    g = Generator.from_triples(list("xyh"), [("x", "h", 2.0), ("y", "x", 1.0), ("h", "y", 1.0)])
    est = estimate_hitting(g, HittingQuery.normalized("x", "x", ["h"]), trials=5000, seed=2)
    assert est.mean == 0.0


def test_gamblers_ruin_estimate(ruin):
    est = estimate_hitting(ruin, HittingQuery.normalized("3", "10", ["0"]), trials=100_000, seed=4)
    assert abs(est.mean - 0.3) <= 3 * est.stderr
    assert est.horizon_censored == 0


def test_start_in_taboo_does_not_fail_immediately(tri):
    # from 2 with taboo {2}: first jump to 1 (1/2) or to 0 then 1 (1/4)
    est = estimate_hitting(tri, HittingQuery.normalized("2", "1", ["2"]), trials=100_000, seed=8)
    assert abs(est.mean - 0.75) <= 3 * est.stderr


def test_after_exit_same_event(tri):
    q = HittingQuery.normalized("0", "1", ["2"])
    a = estimate_hitting(tri, q, trials=50_000, seed=3)
    b = estimate_hitting_after_exit(tri, q, trials=50_000, seed=3)
    assert a.mean == b.mean
    # first jump lands on 1 with a(0,1)/(-a(0,0)) = 1/2
    assert abs(b.zero_atom - 0.5) <= 3 * b.zero_atom_stderr


def test_after_exit_return_has_no_atom(tri):
    b = estimate_hitting_after_exit(tri, HittingQuery.normalized("0", "0", ["2"]), trials=20_000, seed=3)
    assert b.zero_atom == 0.0


def test_determinism(tri):
    q = HittingQuery.normalized("0", "1", ["2"])
    assert estimate_hitting(tri, q, 30_000, seed=99) == estimate_hitting(tri, q, 30_000, seed=99)


def test_horizon_censoring_counts_as_failure(ruin):
    q = HittingQuery.normalized("5", "10", ["0"])
    short = estimate_hitting(ruin, q, trials=20_000, seed=1, horizon=5.0)
    assert short.horizon_censored > 0
    full = estimate_hitting(ruin, q, trials=20_000, seed=1)
    assert short.mean < full.mean


def test_horizon_doubling_is_harmless(ruin):
    q = HittingQuery.normalized("3", "10", ["0"])
    h = default_horizon(ruin)
    a = estimate_hitting(ruin, q, trials=50_000, seed=6, horizon=h)
    b = estimate_hitting(ruin, q, trials=50_000, seed=6, horizon=2 * h)
    assert abs(a.mean - b.mean) < 2 * a.stderr


def test_trials_must_be_positive(tri):
    with pytest.raises(ValueError):
        estimate_hitting(tri, ("0", "1", ["2"]), trials=0)


def test_value_iteration_recurrent():
    vi = value_iteration_hitting(build_cycle(5), "0")
    assert vi.converged
    np.testing.assert_allclose(vi.values, 1.0, atol=1e-10)


def test_value_iteration_complete_graph(tri):
    vi = value_iteration_hitting(tri, "1", ["2"])
    assert vi["0"] == pytest.approx(0.5, abs=1e-11)


def test_value_iteration_unreachable_stays_zero():
    g = Generator.from_triples(list("xyh"), [("x", "h", 2.0), ("y", "x", 1.0), ("h", "y", 1.0)])
    vi = value_iteration_hitting(g, "y", ["h"])
    assert vi["x"] == 0.0


def test_value_iteration_reports_non_convergence():
    vi = value_iteration_hitting(build_birth_death(30, 1.0, 1.0), "30", ["0"], max_iter=5)
    assert not vi.converged and vi.iterations == 5
    with pytest.raises(ValueError):
        value_iteration_hitting(build_cycle(3), "0", tol=0)
