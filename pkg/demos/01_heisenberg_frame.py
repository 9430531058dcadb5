"""
Vector fields on the Heisenberg group
=====================================

The horizontal frame X = d/dx + 2y d/dt, Y = d/dy - 2x d/dt and the gauge
norm, checked against their dilation behaviour.
"""

import numpy as np

from xelliptic import heisenberg_family, homogeneous_norm

fam = heisenberg_family(1)
print(fam.describe())

# the frame is a 2 x 3 matrix at each point
p = np.array([0.3, -0.2, 0.1])
print(fam.evaluate(p))

# delta_lam (x, y, t) = (lam x, lam y, lam^2 t) scales the gauge by lam
lam = 2.5
q = np.array([lam * p[0], lam * p[1], lam ** 2 * p[2]])
print("gauge ratio", homogeneous_norm(q) / homogeneous_norm(p))
