"""
Assembling X*(A X u) = f on a gauge ball
========================================

Build the masked grid, a rough measurable coefficient, and solve with
conjugate gradients.  The dense factorization serves as a reference.
"""

import numpy as np

from xelliptic import (SolverSettings, assemble_stiffness, build_ball_domain, cg_solve, dense_solve,
                       heisenberg_family, random_measurable_coefficient, rhs_from_density, x_grad_h)

fam = heisenberg_family(1)
dom = build_ball_domain(fam, 1.0, 9, gauge="heisenberg")
print(dom.describe())

A = random_measurable_coefficient(fam.m, 1.0, 4.0, seed=7)
K = assemble_stiffness(dom, fam, A)
print(K.metadata())

f = dom.sample(lambda x: 1.0 + x[:, 0])
b = rhs_from_density(dom, f)
rep = cg_solve(K, b, tol=1e-10)
print(rep.summary())

ref = dense_solve(K, b)
print("max |cg - dense|", np.max(np.abs(rep.solution.values - ref.values)))

# energy sits between alpha and beta times the horizontal Dirichlet integral
u = rep.solution
xn = x_grad_h(u, fam).weighted_sq_norm()
print("energy / |X_h u|^2 =", K.energy(u) / xn)
