"""
Checking exact answers by simulation
====================================

Trajectories are driven by a counter-based generator, so each trial has
its own reproducible stream and the estimate is identical on every run.
"""

from taboohit import (
    HittingQuery,
    build_birth_death,
    estimate_hitting,
    estimate_hitting_after_exit,
    hitting_probability,
    simulate_trajectory,
)

gen = build_birth_death(10, 0.5, 0.5)
q = HittingQuery.normalized("3", "10", ["0"])

exact = hitting_probability(gen, q.source, q.target, q.taboo).value
est = estimate_hitting(gen, q, trials=100_000, seed=1)
print(f"exact {exact:.6f}  estimate {est.mean:.6f} +- {est.stderr:.6f}  censored {est.horizon_censored}")

# the variant that starts its clock at the first jump also reports the
# chance of landing on the target with that jump
bar = estimate_hitting_after_exit(gen, HittingQuery.normalized("9", "10", ["0"]), trials=100_000, seed=1)
print(f"first jump lands on 10: {bar.zero_atom:.4f} (exact 0.5)")

# any single trial can be replayed in full
path = simulate_trajectory(gen, "3", seed=1, horizon=10.0, trial=0)
for t, state in path.jumps[:6]:
    print(f"{t:8.4f}  {state}")
