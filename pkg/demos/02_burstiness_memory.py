"""Burstiness and memory on processes whose answers are known.

A periodic train sits at B_n = -1, a Poisson train near 0, and a two-state
Markov chain that alternates fast and slow regimes is bursty with positive
memory.  The finite-size correction matters most for short sequences.
"""

import numpy as np

from fandomdyn import simulate, temporal

for kind in ("periodic", "poisson", "markov"):
    taus = simulate.simulate_gaps(kind, 2000, seed=1)
    m = temporal.memory(taus)
    print(f"{kind:>9}: B = {temporal.burstiness(taus):+.3f}  B_n = "
          f"{temporal.burstiness_finite(taus):+.3f}  M = {'undefined' if m is None else f'{m:+.3f}'}")

print("\nshort Poisson sequences (n_tau = 10), averaged over 500 draws:")
b, bn = [], []
for child in simulate.child_seeds(0, 500):
    taus = simulate.simulate_gaps("poisson", 10, child)
    b.append(temporal.burstiness(taus))
    bn.append(temporal.burstiness_finite(taus))
print(f"  mean B   = {np.mean(b):+.3f}  (biased towards -1)")
print(f"  mean B_n = {np.mean(bn):+.3f}")
