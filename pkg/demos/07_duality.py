"""
Duality with a nonsymmetric coefficient
=======================================

For A not symmetric the adjoint problem uses A^T.  The pairings int g u
and int f v agree to solver precision.
"""

import numpy as np

from xelliptic import ScalarField, build_ball_domain, heisenberg_family, random_measurable_coefficient
from xelliptic.approximation import duality_check

fam = heisenberg_family(1)
dom = build_ball_domain(fam, 1.0, 9, gauge="heisenberg")
A = random_measurable_coefficient(fam.m, 1.0, 4.0, seed=7, symmetric=False)
rng = np.random.default_rng(0)
f = ScalarField(dom, rng.standard_normal(dom.n_int))
g = ScalarField(dom, rng.standard_normal(dom.n_int))
print(duality_check(dom, fam, A, f, g).to_dict())
