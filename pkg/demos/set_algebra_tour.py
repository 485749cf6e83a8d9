"""A short tour of constrained zonotopes.

Run with ``python demos/set_algebra_tour.py``.
"""

import numpy as np

from hierdetect import setops

# A zonotope is a center plus a generator matrix: here a tilted parallelogram.
z = setops.zonotope([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
print("parallelogram:", z)
print("interval hull:", setops.interval_hull(z))

# Intersections stay exact by adding equality constraints on the weights.
window = setops.box([0.2, -0.3], [2.0, 0.3])
both = setops.intersect(z, window)
print("intersection:", both)
empty, cert = setops.is_empty(both)
print("empty?", empty, " min ||beta||_inf =", round(cert.objective, 4))
print("a point in both sets:", setops.witness_point(both, cert))

# Disjoint sets are reported as empty, with no witness.
far = setops.box([5.0, 5.0], [6.0, 6.0])
print("far window empty?", setops.is_empty(setops.intersect(z, far))[0])

# Linear maps and Minkowski sums are exact as well.
rot = np.array([[0.0, -1.0], [1.0, 0.0]])
grown = setops.minkowski_sum(setops.linear_map(rot, both), setops.box([-0.1, -0.1], [0.1, 0.1]))
print("rotated and padded:", grown, "hull:", setops.interval_hull(grown))

# Balls have no exact representation, so they are enclosed.
for template in (setops.BallTemplate("box"), setops.BallTemplate("refined", 3)):
    ball = setops.enclose_ball(2, 1.0, template)
    pts = setops.sample(ball, 2000, seed=0)
    print(f"{template.kind:8s} enclosure: {ball.n_gen} generators, "
          f"{np.mean(np.linalg.norm(pts, axis=1) <= 1):.0%} of samples inside the unit disc")

# Vertices of a 2D projection, ready to plot.
print("polygon of the intersection:\n", setops.polygon(both).round(3))
