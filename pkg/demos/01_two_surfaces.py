"""Geodesics and Jacobi fields on the two model surfaces.

On the octagon surface every geodesic sees curvature -1 and perpendicular
Jacobi fields grow like sinh t. On the collar a geodesic that circles the
flat waist sees zero curvature and its Jacobi fields grow only linearly.
"""

import math

from flatstrip import (ConstantNegative, JacobiState, build_collar, geodesic_flow, jacobi_evolve,
                       rank_classify)

M = ConstantNegative()
collar = build_collar(c=1.0, w=0.5, s=0.5)

theta = M.tangent(0.0, 1.0, math.pi / 2)
end = geodesic_flow(M, theta, 2.0)
print(f"vertical geodesic after t = 2: y = {end.base.y:.6f} (e^2 = {math.e ** 2:.6f})")

for T in (1.0, 3.0, 5.0):
    j = jacobi_evolve(M, theta, T, JacobiState(0.0, 1.0))
    print(f"K = -1, T = {T}: J = {j.J:.6f}, sinh T = {math.sinh(T):.6f}")

band = collar.band_circle(0.1)
for T in (1.0, 3.0, 5.0):
    j = jacobi_evolve(collar, band, T, JacobiState(0.0, 1.0))
    print(f"flat band, T = {T}: J = {j.J:.6f}")

for name, model, th in (("octagon", M, M.tangent(0.3, 1.1, 0.4)),
                        ("band circle", collar, band),
                        ("crossing geodesic", collar, collar.tangent(0.0, 0.0, 0.2))):
    lab = rank_classify(model, th, 20.0)
    print(f"{name:>18}: rank {lab.label}, lambda {lab.lyapunov:.4f}, max |K| {lab.max_abs_K:.3f}")
