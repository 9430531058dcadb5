"""
Marcinkiewicz norms and tail exponents
======================================

A field |x|^-1 in three dimensions lies in weak-L^3 but not L^3.  Its
distribution function decays like lam^-3.
"""

from xelliptic import build_ball_domain, euclidean_family, fit_tail_exponent, lp_norm, weak_lp_norm
from xelliptic.approximation import gauge_power_density

fam = euclidean_family(3)
for res in (17, 33, 49):
    dom = build_ball_domain(fam, 1.0, res)
    v = gauge_power_density(dom, 1.0, "euclidean")
    fit = fit_tail_exponent(v)
    print(f"res {res:3d}  weak-L3 {weak_lp_norm(v, 3):.4f}  L3 {lp_norm(v, 3):.4f}  tail slope {fit.slope:.3f}")

# the strong norm creeps up with resolution (log divergence), the weak one stays put
