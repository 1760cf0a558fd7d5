"""Reproducible synthetic event streams.

One master seed fans out into independent child streams, so a batch of
simulations gives identical results however it is scheduled.
"""

from fandomdyn import simulate, temporal

children = simulate.child_seeds(42, 4)
for kind, child in zip(simulate.KINDS, children):
    times = simulate.simulate_events(kind, 500, child)
    print(f"{kind:>9}: span {times[-1]:9.2f}, B_n {temporal.burstiness_finite(times[1:] - times[:-1]):+.3f}")

again = simulate.simulate_events("poisson", 500, simulate.child_seeds(42, 4)[1])
first = simulate.simulate_events("poisson", 500, simulate.child_seeds(42, 4)[1])
print("rerun identical:", bool((again == first).all()))
