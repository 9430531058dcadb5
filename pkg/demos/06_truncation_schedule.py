"""
Solutions by approximation
==========================

f = rho^-3 is integrable on the gauge ball but unbounded.  Solve with the
truncated data T_n(f) and watch the increments in M^{Q/(Q-2)} against the
L^1 increments of the data.
"""

from xelliptic import build_ball_domain, heisenberg_family, identity_coefficient
from xelliptic.approximation import TruncationSchedule, gauge_power_density, solve_by_approximation

fam = heisenberg_family(1)
dom = build_ball_domain(fam, 1.0, 17, gauge="heisenberg")
f = gauge_power_density(dom, 3.0, "heisenberg")

u, trace = solve_by_approximation(dom, fam, identity_coefficient(fam.m), f, TruncationSchedule.dyadic(11))
for inc in trace.increments:
    r = inc["ratio"]
    print(inc["levels"], f"{inc['du_weak']:.3e}", f"{inc['df_l1']:.3e}", "-" if r is None else f"{r:.3f}")
print("warnings:", trace.warnings or "none")
