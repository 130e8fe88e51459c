"""
Gambler's ruin
==============

A birth-death chain on 0..10.  Reaching 10 before 0 is the classical ruin
problem, so the computed values can be compared with closed forms.
"""

import numpy as np

from taboohit import build_birth_death, hitting_prob_first_step

N = 10
x = np.arange(1, N)

fair = hitting_prob_first_step(build_birth_death(N, 0.5, 0.5), str(N), ["0"])
print("fair:  ", np.round([fair[str(k)] for k in x], 12))
print("x / N: ", x / N)

# upward rate twice the downward rate
biased = hitting_prob_first_step(build_birth_death(N, 2.0, 1.0), str(N), ["0"])
closed = (1 - 0.5**x) / (1 - 0.5**N)
err = max(abs(biased[str(k)] - c) for k, c in zip(x, closed))
print("biased max error vs closed form:", err)
