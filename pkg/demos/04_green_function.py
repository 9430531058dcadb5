"""
Discrete fundamental solution of the sub-Laplacian
==================================================

On H^1 (Q = 4) the solution with a unit Dirac at the origin should look like
c (rho^-2 - 1) inside the unit gauge ball.
"""

import math

from xelliptic import green_function_compare

for res in (17, 33):
    g = green_function_compare(1, 1.0, res)
    print(f"res {res}: c = {g.constant:.5f}, annulus error {g.rel_error:.4f}, {g.n_annulus} cells")

print("1/(8 pi) =", 1 / (8 * math.pi))
