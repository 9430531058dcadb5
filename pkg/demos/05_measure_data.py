"""
Measure data and weak summability
=================================

The Dirac solution is in M^{Q/(Q-2)} and its horizontal gradient in
M^{Q/(Q-1)}.  Fitted distribution tails show the two exponents.
"""

import numpy as np

from xelliptic import build_ball_domain, heisenberg_family, identity_coefficient
from xelliptic.approximation import measure_tail, solve_measure

fam = heisenberg_family(1)
dom = build_ball_domain(fam, 1.0, 33, gauge="heisenberg")
m = solve_measure(dom, fam, identity_coefficient(fam.m), np.zeros(3), 1.0)
print(m.report())

t = measure_tail(m, fam)
print(f"u tail {t['u']['slope']:.3f} (target {t['target_u']:.3f})")
print(f"|Xu| tail {t['xgrad']['slope']:.3f} (target {t['target_xgrad']:.3f})")
