"""Discrete X-elliptic bilinear form and load vectors.

The form is ``u^T K v = sum_cells vol * A(x_c) X_h u(c) . X_h v(c)``, i.e.
``K = B^T W B`` with B the stacked X-gradient and W block-diagonal with
blocks ``vol * A(x_c)``.  The sum runs over the gradient support (interior
cells plus ghost layer).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .fields import FieldFamily
from .grid import DiscreteDomain, FrameField, ScalarField, difference_matrices, x_gradient_matrices

__all__ = [
    "CoefficientSpec",
    "StiffnessOperator",
    "identity_coefficient",
    "diagonal_coefficient",
    "random_measurable_coefficient",
    "coefficient_from_config",
    "assemble_stiffness",
    "rhs_from_density",
    "rhs_from_flux",
    "rhs_from_dirac",
]


@dataclass(frozen=True)
class CoefficientSpec:
    """Matrix field A(x) of size m x m with ellipticity window [alpha, beta].

    ``eval`` maps points of shape (P, N) to matrices of shape (P, m, m).  With
    ``symmetric=True`` the output is symmetrised on evaluation.
    """

    alpha: float
    beta: float
    m: int
    eval_fn: Callable = field(repr=False, compare=False)
    kind: str = "identity"
    seed: int | None = None
    symmetric: bool = True

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta >= self.alpha):
            raise ValueError(f"need 0 < alpha <= beta, got alpha={self.alpha}, beta={self.beta}")
        if self.kind != "identity" and not self.beta > self.alpha:
            raise ValueError(f"need alpha < beta for kind {self.kind!r}")

    def eval(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        A = np.asarray(self.eval_fn(pts), dtype=float)
        if A.shape != (pts.shape[0], self.m, self.m):
            raise ValueError(f"coefficient returned shape {A.shape}, expected {(pts.shape[0], self.m, self.m)}")
        if not np.all(np.isfinite(A)):
            raise ValueError(f"coefficient {self.kind!r} produced non-finite entries")
        if self.symmetric:
            A = 0.5 * (A + A.transpose(0, 2, 1))
        return A

    def scaled(self, c: float) -> "CoefficientSpec":
        if not c > 0:
            raise ValueError("scale factor must be positive")
        fn = self.eval_fn
        return replace(self, alpha=self.alpha * c, beta=self.beta * c, eval_fn=lambda pts: c * fn(pts))

    def describe(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta, "seed": self.seed, "symmetric": self.symmetric}


def identity_coefficient(m: int) -> CoefficientSpec:
    eye = np.eye(m)
    return CoefficientSpec(1.0, 1.0, m, lambda pts: np.broadcast_to(eye, (pts.shape[0], m, m)).copy(), kind="identity")


def diagonal_coefficient(m: int, alpha: float, beta: float) -> CoefficientSpec:
    """Constant diag(alpha, ..., beta) with entries evenly spaced."""
    d = np.diag(np.linspace(alpha, beta, m))
    return CoefficientSpec(alpha, beta, m, lambda pts: np.broadcast_to(d, (pts.shape[0], m, m)).copy(), kind="diagonal")


def _random_rotations(rng, count, m):
    G = rng.standard_normal((count, m, m))
    Qm, R = np.linalg.qr(G)
    Qm = Qm * np.sign(np.diagonal(R, axis1=1, axis2=2))[:, None, :]
    return Qm


def random_measurable_coefficient(m: int, alpha: float, beta: float, seed: int = 0, symmetric: bool = True,
                                  skew: float = 1.0) -> CoefficientSpec:
    """Independent draw per evaluation point: A = R^T diag(lam) R, lam ~ U[alpha, beta].

    The draw is reproducible from ``seed`` and the order of points.  With
    ``symmetric=False`` a skew part of size ``skew * (beta - alpha) / 2`` is
    added; it leaves A eta . eta, hence the window, unchanged.
    """

    def fn(pts):
        rng = np.random.default_rng(seed)
        P = pts.shape[0]
        lam = rng.uniform(alpha, beta, size=(P, m))
        R = _random_rotations(rng, P, m)
        A = np.einsum("pki,pk,pkj->pij", R, lam, R)
        if not symmetric:
            G = rng.standard_normal((P, m, m))
            S = 0.5 * (G - G.transpose(0, 2, 1))
            S /= np.maximum(np.linalg.norm(S, axis=(1, 2), ord=2), 1e-300)[:, None, None]
            A = A + skew * 0.5 * (beta - alpha) * S
        return A

    return CoefficientSpec(alpha, beta, m, fn, kind="random_measurable", seed=seed, symmetric=symmetric)


def coefficient_from_config(cfg: dict, m: int) -> CoefficientSpec:
    kind = cfg.get("kind", "identity")
    if kind == "identity":
        return identity_coefficient(m)
    if kind == "diagonal":
        return diagonal_coefficient(m, cfg["alpha"], cfg["beta"])
    if kind == "random_measurable":
        return random_measurable_coefficient(m, cfg["alpha"], cfg["beta"], seed=cfg.get("seed", 0),
                                             symmetric=cfg.get("symmetric", True))
    raise ValueError(f"unknown coefficient kind {kind!r}")


@dataclass(frozen=True, eq=False)
class StiffnessOperator:
    K: sp.csr_matrix = field(repr=False)
    domain: DiscreteDomain = field(repr=False)
    family_label: str = ""
    coeff_kind: str = ""
    transpose: bool = False
    epsilon: float = 0.0

    @property
    def n_int(self) -> int:
        return self.K.shape[0]

    @property
    def h(self) -> np.ndarray:
        return self.domain.h

    @property
    def is_symmetric(self) -> bool:
        return (self.K != self.K.T).nnz == 0

    def matvec(self, u) -> np.ndarray:
        return self.K @ (u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float))

    def energy(self, u) -> float:
        vals = u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)
        return float(vals @ (self.K @ vals))

    def metadata(self) -> dict:
        return {"family": self.family_label, "coefficient": self.coeff_kind, "h": self.h.tolist(),
                "n_int": self.n_int, "nnz": int(self.K.nnz), "transpose": self.transpose, "epsilon": self.epsilon}

    def to_coo_csv(self, path) -> None:
        coo = self.K.tocoo()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "col", "value"])
            for r, c, v in zip(coo.row, coo.col, coo.data):
                w.writerow([int(r), int(c), repr(float(v))])


def assemble_stiffness(domain: DiscreteDomain, family: FieldFamily, coeff: CoefficientSpec,
                       transpose: bool = False, epsilon: float = 0.0) -> StiffnessOperator:
    """Assemble K = B^T W B.

    ``transpose=True`` uses A^T in W, giving the adjoint form.  ``epsilon > 0``
    adds ``epsilon * h_min^2`` times the Euclidean stiffness to lift a
    possible discrete kernel; it is off by default.
    """
    if coeff.m != family.m:
        raise ValueError(f"coefficient is {coeff.m}x{coeff.m}, family has m={family.m}")
    B = x_gradient_matrices(domain, family)
    A = coeff.eval(domain.support_centers)
    if transpose:
        A = A.transpose(0, 2, 1)
    vol = domain.cell_volume
    m = family.m
    K = sp.csr_matrix((domain.n_int, domain.n_int))
    BT = [Bj.T.tocsr() for Bj in B]
    for j in range(m):
        for l in range(m):
            w = A[:, j, l]
            if np.any(w != 0):
                K = K + BT[j] @ sp.diags(vol * w) @ B[l]
    if epsilon:
        hmin2 = float(np.min(domain.h)) ** 2
        for Dk in difference_matrices(domain):
            K = K + (epsilon * hmin2 * vol) * (Dk.T @ Dk)
    if coeff.symmetric:
        K = 0.5 * (K + K.T)
    K = sp.csr_matrix(K)
    K.sum_duplicates()
    K.sort_indices()
    return StiffnessOperator(K, domain, family.label, coeff.kind, transpose, float(epsilon))


def rhs_from_density(domain: DiscreteDomain, f) -> ScalarField:
    """b_c = f(x_c) * vol.  ``f`` is a vectorised callable, a ScalarField or an array."""
    if isinstance(f, ScalarField):
        vals = f.values
    elif callable(f):
        vals = np.asarray(f(domain.centers), dtype=float).reshape(-1)
    else:
        vals = np.asarray(f, dtype=float).reshape(-1)
    if vals.shape[0] != domain.n_int:
        raise ValueError(f"density has {vals.shape[0]} samples, domain has {domain.n_int} cells")
    if not np.all(np.isfinite(vals)):
        raise ValueError("density has non-finite samples at cell centers")
    return ScalarField(domain, vals * domain.cell_volume)


def rhs_from_flux(domain: DiscreteDomain, family: FieldFamily, F) -> ScalarField:
    """Load vector of X*F: b . v = sum_cells vol * F(c) . X_h v(c)."""
    if not isinstance(F, FrameField):
        F = FrameField(domain, np.asarray(F, dtype=float))
    if F.m != family.m:
        raise ValueError(f"flux has {F.m} components, family has m={family.m}")
    B = x_gradient_matrices(domain, family)
    vol = domain.cell_volume
    b = np.zeros(domain.n_int)
    for j, Bj in enumerate(B):
        b += Bj.T @ (vol * F.values[:, j])
    return ScalarField(domain, b)


def rhs_from_dirac(domain: DiscreteDomain, location, mass: float) -> ScalarField:
    """Point mass at the interior cell nearest to ``location``.

    Ties go to the lowest multi-index.  The location must lie in the closure
    of some interior cell.
    """
    x = np.asarray(location, dtype=float).reshape(-1)
    if x.shape[0] != domain.N:
        raise ValueError(f"location has dimension {x.shape[0]}, domain has {domain.N}")
    d2 = np.sum((domain.centers - x) ** 2, axis=1)
    dmin = d2.min()
    cell = int(np.flatnonzero(d2 <= dmin + 1e-12 * max(dmin, float(domain.h @ domain.h)))[0])
    if np.any(np.abs(domain.centers[cell] - x) > 0.5 * domain.h * (1 + 1e-12)):
        raise ValueError(f"location {x.tolist()} is outside the discrete domain")
    b = np.zeros(domain.n_int)
    b[cell] = float(mass)
    return ScalarField(domain, b)
