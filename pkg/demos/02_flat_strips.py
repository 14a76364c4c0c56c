"""Flat strips and the quotient that collapses them.

Band circles at different heights of the collar stay at bounded distance
for all time, so they form one equivalence class: a flat strip of width w.
Collapsing each strip to a point gives a quotient flow that is expansive,
while the original flow is not.
"""

import numpy as np

from flatstrip import (ConstantNegative, build_collar, detect_strip, expansivity_probe,
                       quotient_class, quotient_distance)

FAST = dict(scan=(1.0, 1e-2), T=300.0)
collar = build_collar(c=1.0, w=0.5, s=0.5)
M = ConstantNegative()

strip = detect_strip(collar, collar.band_circle(), **FAST)
print(f"band strip: [{strip.lo:.4f}, {strip.hi:.4f}], width {strip.width:.4f} (w = 0.5)")

off = detect_strip(collar, collar.tangent(0.0, 0.0, 1.2), **FAST)
print(f"crossing geodesic: trivial strip = {off.trivial}")

const = quotient_class(M, M.tangent(0.1, 1.0, 0.7))
print(f"octagon surface: trivial class = {const.trivial}")

c1 = quotient_class(collar, collar.band_circle(0.0, 1.0), **FAST)
c2 = quotient_class(collar, collar.band_circle(0.2, 1.0), **FAST)
print(f"quotient distance between band circles at heights 0 and 0.2: "
      f"{quotient_distance(collar, c1, c2):.4f}")

h = collar.band_halfwidth
band = [collar.band_circle(r).as_array() for r in np.linspace(-0.8 * h, 0.8 * h, 4)]
pairs = [(band[i], band[j]) for i in range(4) for j in range(i + 1, 4)]
for flow in ("original", "quotient"):
    rep = expansivity_probe(collar, flow, 0.2, pairs, T=20.0, equiv_kw={"T": 300.0})
    print(f"{flow:>8} flow: {len(rep.violators)} of {rep.checked} pairs stay within 0.2")
