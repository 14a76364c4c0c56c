"""Entropy estimates and equidistribution of closed geodesics.

Greedy separated sets give a lower bound for the topological entropy.
Averages of observables over closed geodesics of length at most T approach
their Liouville averages as T grows. On the collar band strip the spanning
counts do not grow, so the strip itself carries no entropy.
"""

from flatstrip import (ConstantNegative, build_collar, class_entropy_check, count_separated,
                       entropy_estimate, mme_diagnostics, quotient_class)
from flatstrip.ergodic import ball_sampler

M = ConstantNegative()
Z = ball_sampler(M, radius=0.05, seed=0)
counts = [count_separated(M, Z, T, 0.1, n_candidates=1000) for T in (2.0, 4.0, 6.0)]
est = entropy_estimate(counts)
print(f"separated counts {[c.M for c in counts]}, slope {est.h:.3f} ({est.caveats[0]})")

rep = mme_diagnostics(M, (4.0, 6.0, 8.0), liouville_cells=(200, 200))
for name in rep.values:
    vals = ", ".join(f"{v:.4f}" for v in rep.values[name])
    print(f"{name:>15}: orbit averages {vals}; Liouville {rep.liouville[name]:.4f}")

collar = build_collar(1.0, 0.5, 0.5)
cls = quotient_class(collar, collar.band_circle(), scan=(1.0, 1e-2), T=300.0)
ce = class_entropy_check(collar, cls, (1, 5, 10, 20))
print(f"band strip spanning counts {ce.sizes} at n = {ce.n_grid}")
