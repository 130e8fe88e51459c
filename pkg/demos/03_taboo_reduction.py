"""
Shrinking the taboo set one state at a time
===========================================

A hitting probability under a large taboo set can be assembled from
one-state taboo values by repeatedly adding a forbidden state.  The trace
records every intermediate value.
"""

import numpy as np

from taboohit import HittingQuery, format_trace, hitting_probability, random_chain, reduce_to_singleton

gen = random_chain(12, np.random.default_rng(3), density=0.3)
q = HittingQuery.normalized("0", "1", ["2", "3", "4"])

r = reduce_to_singleton(gen, q)
print(format_trace(r.trace))
print("reduced:", r.value)
print("direct: ", hitting_probability(gen, "0", "1", ["2", "3", "4"], "firststep").value)

# the order in which taboo states are added does not matter
for order in (["4", "3", "2"], ["3", "2", "4"]):
    print(order, reduce_to_singleton(gen, q, order=order).value)
