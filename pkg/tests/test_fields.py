import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xelliptic.fields import (HeisenbergParams, custom_family, euclidean_family, family_from_config,
                              heisenberg_family, homogeneous_norm)


def test_euclidean_identity_frame():
    fam = euclidean_family(3)
    assert fam.Q == 3 and fam.m == 3 and fam.N == 3
    np.testing.assert_array_equal(fam.evaluate([0.3, -2.0, 7.0]), np.eye(3))


def test_euclidean_rejects_low_dimension():
    with pytest.raises(ValueError):
        euclidean_family(2)


def test_euclidean_frame_is_constant(rng):
    fam = euclidean_family(4)
    pts = rng.uniform(-5, 5, (20, 4))
    np.testing.assert_array_equal(fam.evaluate(pts), np.broadcast_to(fam.evaluate(np.zeros(4)), (20, 4, 4)))


def test_heisenberg_frame_at_sample_point():
    fam = heisenberg_family(HeisenbergParams(1))
    np.testing.assert_array_equal(fam.evaluate([1.0, 2.0, 3.0]), [[1, 0, 4], [0, 1, -2]])
    np.testing.assert_array_equal(fam.evaluate([0.0, 0.0, 0.0]), [[1, 0, 0], [0, 1, 0]])
    assert fam.Q == 4


def test_heisenberg_rows_general_n(rng):
    n = 2
    fam = heisenberg_family(n)
    p = rng.standard_normal(2 * n + 1)
    C = fam.evaluate(p)
    x, y = p[:n], p[n:2 * n]
    for i in range(n):
        expect_x = np.zeros(2 * n + 1)
        expect_x[i], expect_x[-1] = 1.0, 2 * y[i]
        expect_y = np.zeros(2 * n + 1)
        expect_y[n + i], expect_y[-1] = 1.0, -2 * x[i]
        np.testing.assert_allclose(C[i], expect_x)
        np.testing.assert_allclose(C[n + i], expect_y)
    assert fam.Q == 6 and fam.m == 4 and fam.N == 5


@pytest.mark.parametrize("n", [0, -1, 1.5])
def test_heisenberg_rejects_bad_order(n):
    with pytest.raises(ValueError):
        HeisenbergParams(n)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_heisenberg_full_row_rank(rng, n):
    fam = heisenberg_family(n)
    C = fam.evaluate(rng.uniform(-3, 3, (50, 2 * n + 1)))
    smin = np.linalg.svd(C, compute_uv=False)[:, -1]
    assert np.all(smin >= 1 - 1e-12)


def test_heisenberg_frame_lipschitz_probe(rng):
    fam = heisenberg_family(1)
    a, b = rng.uniform(-1, 1, (2, 200, 3))
    ratio = np.linalg.norm(fam.evaluate(a) - fam.evaluate(b), axis=(1, 2), ord="fro") / np.linalg.norm(a - b, axis=1)
    # d C / d(x, y) has Frobenius norm 2
    assert ratio.max() <= 2.0 + 1e-12


def test_homogeneous_norm_values():
    assert homogeneous_norm([0, 0, 0]) == 0
    assert homogeneous_norm([1, 0, 0]) == 1
    assert homogeneous_norm([0, 0, 1]) == 1
    assert homogeneous_norm([0, 1, 0]) == 1
    with pytest.raises(ValueError):
        homogeneous_norm([1.0, 2.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.floats(0.01, 100))
def test_homogeneous_norm_dilation(p, lam):
    x, y, t = p
    dil = homogeneous_norm([lam * x, lam * y, lam ** 2 * t])
    assert dil == pytest.approx(lam * homogeneous_norm(p), rel=1e-12, abs=1e-300)


def test_custom_family_trusts_declared_Q():
    fam = custom_family(lambda pts: np.ones((pts.shape[0], 1, 3)), m=1, N=3, Q=5.5, label="toy")
    assert fam.Q == 5.5 and fam.describe()["label"] == "toy"
    with pytest.raises(ValueError):
        custom_family(lambda pts: np.ones((pts.shape[0], 1, 3)), m=1, N=3, Q=2.0)


def test_frame_rejects_non_finite():
    fam = custom_family(lambda pts: np.full((pts.shape[0], 1, 3), np.nan), m=1, N=3, Q=3)
    with pytest.raises(ValueError):
        fam.evaluate([0, 0, 0])


def test_family_from_config():
    assert family_from_config({"family": "euclidean", "dim": 3}).Q == 3
    assert family_from_config({"family": "heisenberg", "n": 2}).Q == 6
    with pytest.raises(ValueError):
        family_from_config({"family": "carnot"})
