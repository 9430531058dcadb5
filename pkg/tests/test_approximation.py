import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xelliptic.approximation import (MEASURE_TAIL_QUANTILES, TruncationSchedule, duality_check, g_trunc,
                                     gauge_power_density, green_function_compare, green_model, measure_tail,
                                     solve_by_approximation, solve_measure, truncate)
from xelliptic.fields import homogeneous_norm
from xelliptic.grid import ScalarField, build_ball_domain
from xelliptic.norms import distribution_samples, linf_norm, lp_norm
from xelliptic.operator import (assemble_stiffness, identity_coefficient, random_measurable_coefficient,
                                rhs_from_density)
from xelliptic.solver import SolverSettings, dense_solve

finite = st.floats(-1e6, 1e6, allow_nan=False)
height = st.floats(1e-3, 1e6)


def test_truncation_examples():
    assert truncate(5.0, 2) == 2 and truncate(-1.0, 2) == -1 and truncate(-3.0, 2) == -2
    assert g_trunc(5.0, 2) == 3 and g_trunc(1.0, 2) == 0 and g_trunc(-3.0, 2) == -1
    with pytest.raises(ValueError):
        truncate(1.0, 0)
    with pytest.raises(ValueError):
        g_trunc(1.0, -1)


# multiples of 2^-20 below 2^20 add and subtract without rounding
dyadic = st.integers(-2 ** 40, 2 ** 40).map(lambda i: i * 2.0 ** -20)
dyadic_height = st.integers(1, 2 ** 40).map(lambda i: i * 2.0 ** -20)


@settings(max_examples=300)
@given(dyadic, dyadic_height)
def test_truncation_identity_exact_on_dyadics(s, k):
    t = truncate(s, k)
    assert t + g_trunc(s, k) == s
    assert abs(t) <= min(abs(s), k)


@settings(max_examples=300)
@given(finite, height)
def test_truncation_identity_general_floats(s, k):
    t = truncate(s, k)
    # one rounding in s - k, one in the sum
    assert abs(t + g_trunc(s, k) - s) <= 2 * np.spacing(abs(s))
    assert abs(t) <= min(abs(s), k)


@settings(max_examples=300)
@given(finite, finite, height)
def test_truncation_is_one_lipschitz(s, r, k):
    assert abs(truncate(s, k) - truncate(r, k)) <= abs(s - r)


def test_schedule_validation():
    assert TruncationSchedule.dyadic(3).levels == (1.0, 2.0, 4.0, 8.0)
    for bad in [(), (0, 1), (2, 1), (1, 1)]:
        with pytest.raises(ValueError):
            TruncationSchedule(bad)


@pytest.fixture(scope="module")
def setup9(heis_ball9, heis):
    coeff = random_measurable_coefficient(heis.m, 1.0, 4.0, seed=7)
    return heis_ball9, heis, coeff, assemble_stiffness(heis_ball9, heis, coeff)


def test_bounded_datum_gives_identical_iterates(setup9, rng):
    d, fam, coeff, K = setup9
    f = ScalarField(d, rng.uniform(-1, 1, d.n_int))
    u, trace = solve_by_approximation(d, fam, coeff, f, TruncationSchedule((2, 4, 8)), operator=K)
    direct = dense_solve(K, rhs_from_density(d, f))
    assert np.max(np.abs(u.values - direct.values)) <= 1e-8 * np.max(np.abs(direct.values))
    assert all(inc["ratio"] is None for inc in trace.increments)
    assert not trace.warnings
    assert trace.f_l1_error == [0.0, 0.0, 0.0]


def test_zero_datum(setup9):
    d, fam, coeff, K = setup9
    u, trace = solve_by_approximation(d, fam, coeff, d.zeros(), TruncationSchedule.dyadic(2), operator=K)
    assert np.all(u.values == 0) and trace.weak_u == [0.0, 0.0, 0.0]


@pytest.fixture(scope="module")
def singular17(heis):
    d = build_ball_domain(heis, 1.0, 17, gauge="heisenberg")
    f = gauge_power_density(d, 3.0, "heisenberg")
    coeff = identity_coefficient(heis.m)
    K = assemble_stiffness(d, heis, coeff)
    return d, f, coeff, K


def test_cauchy_ratios_for_singular_density(singular17, heis):
    d, f, coeff, K = singular17
    levels = tuple(2.0 ** j for j in range(12))
    u, trace = solve_by_approximation(d, heis, coeff, f, TruncationSchedule(levels), operator=K)
    ratios = [inc["ratio"] for inc in trace.increments if inc["ratio"] is not None]
    assert len(ratios) >= 6
    assert max(ratios) <= 4 * min(ratios)
    assert not trace.warnings
    # L1 error of the truncated data shrinks along the schedule
    assert all(a >= b for a, b in zip(trace.f_l1_error, trace.f_l1_error[1:]))
    assert trace.f_l1_error[-1] == 0.0


def test_final_iterate_is_schedule_independent(singular17, heis):
    d, f, coeff, K = singular17
    top = 2.0 * linf_norm(f)
    u1, _ = solve_by_approximation(d, heis, coeff, f, TruncationSchedule((1, 4, top)), operator=K)
    u2, _ = solve_by_approximation(d, heis, coeff, f, TruncationSchedule((3, top)), operator=K)
    assert np.max(np.abs(u1.values - u2.values)) <= 1e-8 * linf_norm(u1)


def test_limit_is_weak_solution(singular17, heis):
    # once truncation is inactive the iterate satisfies K u = b(f) for the untruncated datum
    d, f, coeff, K = singular17
    u, trace = solve_by_approximation(d, heis, coeff, f, TruncationSchedule((1.0, 2.0 * linf_norm(f))), operator=K)
    b = rhs_from_density(d, f)
    assert np.linalg.norm(K.K @ u.values - b.values) <= 1e-9 * np.linalg.norm(b.values)


def test_solve_measure_mass_and_linearity(setup9):
    d, fam, coeff, K = setup9
    zero = solve_measure(d, fam, coeff, np.zeros(3), 0.0, operator=K)
    assert np.all(zero.solution.values == 0) and zero.weak_u == 0
    a = solve_measure(d, fam, coeff, np.zeros(3), 1.0, operator=K)
    b = solve_measure(d, fam, coeff, [0.25, 0.0, 0.0], 1.0, operator=K)
    both = solve_measure(d, fam, coeff, [[0, 0, 0], [0.25, 0.0, 0.0]], [2.0, 3.0], operator=K)
    expect = 2 * a.solution.values + 3 * b.solution.values
    assert np.max(np.abs(both.solution.values - expect)) <= 1e-8 * np.max(np.abs(expect))
    assert both.mass == 5.0
    double = solve_measure(d, fam, coeff, np.zeros(3), 2.0, operator=K)
    assert double.weak_u == pytest.approx(2 * a.weak_u, rel=1e-8)


def continuum_tail_slope(Q, quantiles, n=200_000, seed=0):
    """Tail slope of c(rho^(2-Q) - 1) on the unit Heisenberg gauge ball, sampled by Monte Carlo."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform([-1, -1, -1], [1, 1, 1], (n, 3))
    rho = homogeneous_norm(pts)
    rho = rho[(rho < 1) & (rho > 0)]
    u = rho ** (2 - Q) - 1
    sl = np.sort(u)[::-1]
    # measure of {u >= sl[i]} is proportional to i + 1
    lo, hi = quantiles
    k = sl.size
    # mirror the distinct-value window: rank by ascending magnitude
    asc = sl[::-1]
    i0, i1 = int(math.floor(lo * (k - 1))), int(math.ceil(hi * (k - 1)))
    lam = asc[i0:i1 + 1]
    mu = (k - np.arange(i0, i1 + 1)).astype(float)
    return float(np.polyfit(np.log(lam), np.log(mu), 1)[0])


@pytest.mark.slow
def test_dirac_tail_matches_continuum(heis):
    d = build_ball_domain(heis, 1.0, 33, gauge="heisenberg")
    m = solve_measure(d, heis, identity_coefficient(heis.m), np.zeros(3), 1.0)
    tails = measure_tail(m, heis)
    # the continuum profile seen through the same window
    ref = continuum_tail_slope(heis.Q, MEASURE_TAIL_QUANTILES)
    assert tails["u"]["slope"] == pytest.approx(ref, rel=0.15)
    assert abs(tails["u"]["slope"] - tails["target_u"]) <= 0.2 * abs(tails["target_u"])
    assert abs(tails["xgrad"]["slope"] - tails["target_xgrad"]) <= 0.25 * abs(tails["target_xgrad"])


def duality_fields(d, rng):
    return ScalarField(d, rng.standard_normal(d.n_int)), ScalarField(d, rng.standard_normal(d.n_int))


def test_duality_rough_nonsymmetric(setup9, rng):
    d, fam, _, _ = setup9
    coeff = random_measurable_coefficient(fam.m, 1.0, 4.0, seed=7, symmetric=False)
    f, g = duality_fields(d, rng)
    tol = 1e-10
    rep = duality_check(d, fam, coeff, f, g, SolverSettings(tol=tol))
    assert rep.relative <= 100 * tol
    assert rep.primal.converged and rep.adjoint.converged


def test_duality_degenerate_cases(setup9, rng):
    d, fam, coeff, _ = setup9
    f, _ = duality_fields(d, rng)
    same = duality_check(d, fam, coeff, f, f)
    assert same.pairing_primal == pytest.approx(same.pairing_adjoint, rel=1e-9)
    zero = duality_check(d, fam, coeff, d.zeros(), f)
    assert zero.pairing_primal == 0 and zero.pairing_adjoint == 0 and zero.relative == 0


def test_green_model():
    Q = 4.0
    assert green_model(1.0, Q, 1.0) == 0
    assert green_model(0.5, Q, 1.0) == pytest.approx(3.0)
    rho = np.array([0.1, 0.2])
    assert np.log(green_model(rho, Q, 1e6)[1] / green_model(rho, Q, 1e6)[0]) / np.log(2.0) == pytest.approx(2.0 - Q)


def test_green_fit_small_grid(heis):
    # a coarse grid still sees the profile, with the exponent fixed by Q
    rep = green_function_compare(1, 1.0, 17)
    assert rep.exponent == -2.0
    assert rep.rel_error <= 0.15 and rep.constant > 0
    assert rep.n_annulus > 50
    u = rep.solution
    assert np.all(u.values > -1e-12)


@pytest.mark.slow
def test_green_fit_refines():
    coarse = green_function_compare(1, 1.0, 17)
    fine = green_function_compare(1, 1.0, 33)
    assert fine.rel_error < coarse.rel_error <= 0.15
    # constant close to the continuum normalisation 1/(8 pi) for n = 1
    assert fine.constant == pytest.approx(1 / (8 * math.pi), rel=0.1)


@pytest.mark.parametrize("res", [17, 33, 49])
def test_pole_cell_is_offset_by_half_a_cell(eucl3, res):
    d = build_ball_domain(eucl3, 1.0, res)
    v = gauge_power_density(d, 1.0, "euclidean")
    half = np.linalg.norm(0.5 * d.h)
    # the largest value comes from the pole cell evaluated half a cell away
    assert linf_norm(v) == pytest.approx(1.0 / half, rel=1e-12)
