"""
Returning to the origin in three dimensions
===========================================

The simple random walk on Z^3 is transient.  Cutting it to a finite window
with an absorbing outside gives a chain with a finite Green function, and
the return probability settles as the window grows.
"""

from taboohit import LatticeSpec, build_lattice_walk, green_function, hitting_prob_singleton_transient, site_label

o = site_label((0, 0, 0))
for radius in (4, 6, 8, 10):
    gen = build_lattice_walk(LatticeSpec(3, radius))
    g00 = green_function(gen).value(o, o)
    # holding rate is 1, so the return probability is 1 - 1/G(0,0)
    print(f"R={radius:2d}  states={gen.n:5d}  G(0,0)={g00:.6f}  return={1 - 1 / g00:.6f}")

# one forbidden site, computed from Green function entries only
x, y, z = site_label((1, 0, 0)), site_label((0, 1, 0)), o
print("reach (0,1,0) from (1,0,0) avoiding the origin:", hitting_prob_singleton_transient(gen, x, y, z).value)
