import numpy as np
import pytest
import scipy.sparse as sp

from xelliptic.fields import euclidean_family, heisenberg_family
from xelliptic.grid import DiscreteDomain, FrameField, ScalarField, box_domain, build_ball_domain, x_grad_h
from xelliptic.operator import (CoefficientSpec, assemble_stiffness, coefficient_from_config, diagonal_coefficient,
                                identity_coefficient, random_measurable_coefficient, rhs_from_density,
                                rhs_from_dirac, rhs_from_flux)


def _tridiag(n, h):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h ** 2


def test_euclidean_box_is_seven_point_laplacian(eucl3):
    d = box_domain([(0, 1.2), (0, 1.0), (0, 0.8)], (6, 5, 4))
    K = assemble_stiffness(d, eucl3, identity_coefficient(3)).K / d.cell_volume
    n = d.res
    I = [sp.identity(k) for k in n]
    T = [_tridiag(k, hk) for k, hk in zip(n, d.h)]
    L = sp.kron(sp.kron(T[0], I[1]), I[2]) + sp.kron(sp.kron(I[0], T[1]), I[2]) + sp.kron(sp.kron(I[0], I[1]), T[2])
    np.testing.assert_allclose(K.toarray(), L.toarray(), rtol=1e-12, atol=1e-9)


def test_strip_rows_away_from_edge(eucl3):
    d = box_domain([(0, 1.0), (0, 0.1), (0, 0.1)], (10, 1, 1))
    K = (assemble_stiffness(d, eucl3, identity_coefficient(3)).K / d.cell_volume).toarray()
    hx, hy, hz = d.h
    for i in range(1, 9):
        assert K[i, i - 1] == pytest.approx(-1 / hx ** 2)
        assert K[i, i + 1] == pytest.approx(-1 / hx ** 2)
        # along y and z both neighbours are exterior zeros
        assert K[i, i] == pytest.approx(2 / hx ** 2 + 2 / hy ** 2 + 2 / hz ** 2)


def test_zero_field_maps_to_zero(heis, heis_ball9):
    K = assemble_stiffness(heis_ball9, heis, random_measurable_coefficient(2, 1, 4, 7))
    assert np.all(K.matvec(heis_ball9.zeros()) == 0)


def test_symmetric_and_psd(rng, heis, heis_ball9):
    K = assemble_stiffness(heis_ball9, heis, random_measurable_coefficient(2, 1, 4, 7))
    assert K.is_symmetric
    for _ in range(20):
        u = rng.standard_normal(heis_ball9.n_int)
        assert K.energy(u) >= 0


def test_coercivity_sandwich(rng, heis, heis_ball9):
    d = heis_ball9
    coeff = random_measurable_coefficient(2, 1.0, 4.0, seed=7)
    K = assemble_stiffness(d, heis, coeff)
    for _ in range(25):
        u = ScalarField(d, rng.standard_normal(d.n_int))
        xn = x_grad_h(u, heis).weighted_sq_norm()
        e = K.energy(u)
        assert 1.0 * xn * (1 - 1e-12) <= e <= 4.0 * xn * (1 + 1e-12)


def test_coefficient_window(rng):
    coeff = random_measurable_coefficient(3, 0.5, 2.0, seed=3)
    A = coeff.eval(rng.standard_normal((200, 3)))
    np.testing.assert_array_equal(A, A.transpose(0, 2, 1))
    ev = np.linalg.eigvalsh(A)
    assert ev.min() >= 0.5 - 1e-12 and ev.max() <= 2.0 + 1e-12


def test_nonsymmetric_coefficient_keeps_window(rng):
    coeff = random_measurable_coefficient(2, 1.0, 4.0, seed=7, symmetric=False)
    A = coeff.eval(rng.standard_normal((300, 3)))
    assert np.abs(A - A.transpose(0, 2, 1)).max() > 0.1
    ev = np.linalg.eigvalsh(0.5 * (A + A.transpose(0, 2, 1)))
    assert ev.min() >= 1 - 1e-12 and ev.max() <= 4 + 1e-12


def test_adjoint_assembly_is_transpose(heis, heis_ball9):
    coeff = random_measurable_coefficient(2, 1.0, 4.0, seed=7, symmetric=False)
    K = assemble_stiffness(heis_ball9, heis, coeff)
    Kt = assemble_stiffness(heis_ball9, heis, coeff, transpose=True)
    assert not K.is_symmetric
    np.testing.assert_allclose(Kt.K.toarray(), K.K.T.toarray(), rtol=1e-13, atol=1e-10)


def test_scaling(heis, heis_ball9):
    coeff = random_measurable_coefficient(2, 1.0, 4.0, seed=7)
    K1 = assemble_stiffness(heis_ball9, heis, coeff).K
    K3 = assemble_stiffness(heis_ball9, heis, coeff.scaled(3.0)).K
    np.testing.assert_allclose(K3.toarray(), 3.0 * K1.toarray(), rtol=1e-13, atol=1e-10)


def test_monotone_in_mask(rng, heis):
    big = build_ball_domain(heis, 1.0, 9, gauge="heisenberg")
    small_mask = big.mask.copy()
    ext = np.argwhere(small_mask)
    small_mask[tuple(ext[:40].T)] = False
    small = DiscreteDomain(big.bounds, big.res, small_mask)
    coeff = identity_coefficient(2)
    Ks = assemble_stiffness(small, heis, coeff)
    Kb = assemble_stiffness(big, heis, coeff)
    for _ in range(10):
        vs = rng.standard_normal(small.n_int)
        vb = np.zeros(big.n_int)
        vb[big.index_of(small.interior)] = vs
        assert Kb.energy(vb) >= Ks.energy(vs) * (1 - 1e-12)


def test_epsilon_regularisation_adds_energy(rng, heis, heis_ball9):
    coeff = identity_coefficient(2)
    K0 = assemble_stiffness(heis_ball9, heis, coeff)
    K1 = assemble_stiffness(heis_ball9, heis, coeff, epsilon=0.5)
    u = rng.standard_normal(heis_ball9.n_int)
    assert K1.energy(u) > K0.energy(u)
    assert K1.epsilon == 0.5


def test_non_finite_coefficient_rejected(heis, heis_ball9):
    bad = CoefficientSpec(1.0, 2.0, 2, lambda pts: np.full((pts.shape[0], 2, 2), np.nan), kind="diagonal")
    with pytest.raises(ValueError):
        assemble_stiffness(heis_ball9, heis, bad)


def test_coefficient_config_and_window_validation():
    assert coefficient_from_config({"kind": "diagonal", "alpha": 1, "beta": 3}, 2).kind == "diagonal"
    with pytest.raises(ValueError):
        diagonal_coefficient(2, 2.0, 1.0)
    with pytest.raises(ValueError):
        coefficient_from_config({"kind": "mystery"}, 2)


def test_rhs_density_examples(eucl3):
    d = build_ball_domain(eucl3, 1.0, 8)
    V = d.cell_volume
    assert np.all(rhs_from_density(d, lambda p: np.zeros(len(p))).values == 0)
    np.testing.assert_allclose(rhs_from_density(d, lambda p: np.ones(len(p))).values, V)
    b = rhs_from_density(d, lambda p: 1 / np.linalg.norm(p, axis=1))
    np.testing.assert_allclose(b.values, V / np.linalg.norm(d.centers, axis=1), rtol=1e-15)
    with pytest.raises(ValueError), np.errstate(divide="ignore"):
        rhs_from_density(d, lambda p: 1 / np.linalg.norm(p - d.centers[0], axis=1))


def test_rhs_flux_zero_and_telescoping(eucl3):
    d = box_domain([(0, 1.0), (0, 0.1), (0, 0.1)], (10, 1, 1))
    assert np.all(rhs_from_flux(d, eucl3, np.zeros((d.n_int, 3))).values == 0)
    F = np.tile([1.0, 0.0, 0.0], (d.n_int, 1))
    b = rhs_from_flux(d, eucl3, F).values
    nz = np.flatnonzero(b)
    np.testing.assert_array_equal(nz, [0])
    assert b[0] == pytest.approx(-d.cell_volume / d.h[0])


def test_rhs_flux_duality_identity(rng, heis, heis_ball9):
    d = heis_ball9
    for F in (rng.standard_normal((d.n_int, 2)), rng.standard_normal((d.n_support, 2))):
        b = rhs_from_flux(d, heis, F)
        Ff = FrameField(d, F)
        for _ in range(10):
            v = ScalarField(d, rng.standard_normal(d.n_int))
            rhs = d.cell_volume * np.sum(Ff.values * x_grad_h(v, heis).values)
            assert b.values @ v.values == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    with pytest.raises(ValueError):
        rhs_from_flux(d, heis, np.zeros((d.n_int, 3)))


def test_rhs_dirac(heis_ball9):
    d = heis_ball9
    b = rhs_from_dirac(d, [0, 0, 0], 2.5)
    nz = np.flatnonzero(b.values)
    assert len(nz) == 1 and b.values.sum() == 2.5
    np.testing.assert_allclose(d.centers[nz[0]], 0.0)
    assert np.all(rhs_from_dirac(d, [0, 0, 0], 0.0).values == 0)
    with pytest.raises(ValueError):
        rhs_from_dirac(d, [0.99, 0.99, 0.9], 1.0)


def test_rhs_dirac_tie_break_lowest_index(eucl3):
    d = box_domain([(-1, 1)] * 3, 4)
    b = rhs_from_dirac(d, [0, 0, 0], 1.0)
    cell = d.interior[np.flatnonzero(b.values)[0]]
    np.testing.assert_array_equal(cell, [1, 1, 1])


def test_coo_export(tmp_path, heis, heis_ball9):
    K = assemble_stiffness(heis_ball9, heis, identity_coefficient(2))
    K.to_coo_csv(tmp_path / "K.csv")
    data = np.loadtxt(tmp_path / "K.csv", delimiter=",", skiprows=1)
    back = sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=K.K.shape)
    assert abs(back - K.K).max() == 0
    assert K.metadata()["family"] == "heisenberg-1"
