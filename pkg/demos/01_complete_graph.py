"""
Hitting a state before a forbidden one
======================================

Three states joined pairwise at rate 1/2.  Starting from 0, what is the
chance of reaching 1 before ever touching 2?
"""

from taboohit import cross_check, hitting_probability, parse_chain, taboo_green

text = """\
states: 0 1 2
conservative: true
rate: 0 1 0.5
rate: 0 2 0.5
rate: 1 0 0.5
rate: 1 2 0.5
rate: 2 0 0.5
rate: 2 1 0.5
"""
gen = parse_chain(text)

# expected time spent in each free state before the chain enters {2}
times = taboo_green(gen, ["2"])
print("columns:", times.column_labels)
print(times.matrix())

# every route to the answer, side by side
results, spread, agree = cross_check(gen, "0", "1", ["2"])
for r in results:
    print(f"{r.method.value:>10}  {r.value:.12f}")
print("spread", spread, "agree", agree)

# a return needs 0 -> 1 -> 0, each jump taken with probability 1/2
print("return to 0 avoiding 2:", hitting_probability(gen, "0", "0", ["2"]).value)
