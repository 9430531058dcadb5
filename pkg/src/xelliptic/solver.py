"""Linear solves for the assembled form."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import ScalarField
from .operator import StiffnessOperator

__all__ = [
    "SolveReport",
    "SolverSettings",
    "SingularOperatorError",
    "DiscreteDegeneracyError",
    "cg_solve",
    "dense_solve",
    "gmres_solve",
    "solve",
]

DEFAULT_TOL = 1e-10
DENSE_CAP = 5000


class SingularOperatorError(np.linalg.LinAlgError):
    pass


class DiscreteDegeneracyError(RuntimeError):
    """CG met a direction with p^T K p <= 0: the discrete form has a kernel."""


@dataclass
class SolveReport:
    solution: ScalarField
    iterations: int
    residual_rel: float
    status: str
    history: list = field(default_factory=list, repr=False)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def summary(self) -> dict:
        return {"iterations": self.iterations, "residual_rel": self.residual_rel, "status": self.status}


@dataclass(frozen=True)
class SolverSettings:
    tol: float = DEFAULT_TOL
    maxiter: int | None = None
    precond: str = "jacobi"

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError(f"tol must lie in (0, 1), got {self.tol}")
        if self.precond not in ("none", "jacobi"):
            raise ValueError(f"precond must be 'none' or 'jacobi', got {self.precond!r}")
        if self.maxiter is not None and self.maxiter < 1:
            raise ValueError("maxiter must be positive")

    @classmethod
    def from_config(cls, cfg: dict | None) -> "SolverSettings":
        cfg = cfg or {}
        return cls(tol=float(cfg.get("tol", DEFAULT_TOL)), maxiter=cfg.get("maxiter"), precond=cfg.get("precond", "jacobi"))


def _matrix(K):
    return K.K if isinstance(K, StiffnessOperator) else K


def _rhs(b, n):
    vals = b.values if isinstance(b, ScalarField) else np.asarray(b, dtype=float).reshape(-1)
    if vals.shape[0] != n:
        raise ValueError(f"right-hand side has length {vals.shape[0]}, operator has {n} unknowns")
    if not np.all(np.isfinite(vals)):
        raise ValueError("right-hand side has non-finite entries")
    return vals


def _wrap(K, b, x):
    if isinstance(b, ScalarField):
        return ScalarField(b.domain, x)
    if isinstance(K, StiffnessOperator):
        return ScalarField(K.domain, x)
    return x


def cg_solve(K, b, tol: float = DEFAULT_TOL, maxiter: int | None = None, precond: str = "jacobi",
             callback=None, raise_on_breakdown: bool = False) -> SolveReport:
    """Preconditioned conjugate gradients from a zero initial guess.

    Stops when the true relative residual ||b - Ku|| / ||b|| is at most
    ``tol``.  ``callback(x)`` is called after every iteration.  A direction
    with p^T K p <= 0 ends the solve with status ``"breakdown"`` (or raises
    :class:`DiscreteDegeneracyError` when ``raise_on_breakdown``).
    """
    SolverSettings(tol, maxiter, precond)
    A = _matrix(K)
    n = A.shape[0]
    rhs = _rhs(b, n)
    maxiter = 20 * n if maxiter is None else int(maxiter)
    x = np.zeros(n)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0:
        return SolveReport(_wrap(K, b, x), 0, 0.0, "converged")

    if precond == "jacobi":
        d = np.asarray(A.diagonal(), dtype=float)
        inv_d = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 1.0)
    else:
        inv_d = np.ones(n)

    r = rhs.copy()
    z = inv_d * r
    p = z.copy()
    rz = r @ z
    status = "maxiter"
    it = 0
    res = 1.0
    scale = float(abs(A).sum(axis=1).max()) if sp.issparse(A) else float(np.abs(A).sum(axis=1).max())
    while it < maxiter:
        Ap = A @ p
        pAp = p @ Ap
        if not pAp > 1e-14 * scale * (p @ p):
            status = "breakdown"
            break
        step = rz / pAp
        x += step * p
        r -= step * Ap
        it += 1
        if callback is not None:
            callback(x.copy())
        if np.linalg.norm(r) <= tol * bnorm:
            # guard against drift of the recursive residual
            r = rhs - A @ x
            res = np.linalg.norm(r) / bnorm
            if res <= tol:
                status = "converged"
                break
        z = inv_d * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    res = float(np.linalg.norm(rhs - A @ x) / bnorm)
    if status == "breakdown" and raise_on_breakdown:
        raise DiscreteDegeneracyError(f"CG breakdown after {it} iterations; the discrete operator may have a kernel")
    return SolveReport(_wrap(K, b, x), it, res, status)


def dense_solve(K, b, cap: int = DENSE_CAP) -> np.ndarray | ScalarField:
    """Direct factorization (Cholesky if symmetric, LU otherwise).

    Raises :class:`SingularOperatorError` for singular or indefinite input.
    """
    A = _matrix(K)
    n = A.shape[0]
    if n > cap:
        raise ValueError(f"dense_solve limited to {cap} unknowns, got {n}")
    rhs = _rhs(b, n)
    M = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    scale = max(np.abs(M).max(), np.finfo(float).tiny)
    if np.array_equal(M, M.T):
        try:
            c = sla.cho_factor(M, lower=True, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise SingularOperatorError(f"matrix is not positive definite: {exc}") from exc
        if np.min(np.abs(np.diag(c[0]))) ** 2 <= 1e-13 * scale:
            raise SingularOperatorError("zero pivot in Cholesky factorization")
        x = sla.cho_solve(c, rhs)
    else:
        with warnings.catch_warnings():
            # zero pivots are reported below
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(M, check_finite=True)
        if np.min(np.abs(np.diag(lu))) <= 1e-13 * scale:
            raise SingularOperatorError("zero pivot in LU factorization")
        x = sla.lu_solve((lu, piv), rhs)
    return _wrap(K, b, x)


def gmres_solve(K, b, tol: float = DEFAULT_TOL, maxiter: int | None = None) -> SolveReport:
    """Restarted GMRES with Jacobi preconditioning, for nonsymmetric forms."""
    A = _matrix(K)
    n = A.shape[0]
    rhs = _rhs(b, n)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0:
        return SolveReport(_wrap(K, b, np.zeros(n)), 0, 0.0, "converged")
    d = np.asarray(A.diagonal(), dtype=float)
    M = sp.diags(np.where(d != 0, 1.0 / np.where(d != 0, d, 1.0), 1.0))
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.gmres(A, rhs, rtol=tol, atol=0.0, restart=min(n, 200), maxiter=maxiter or 20 * n, M=M,
                         callback=cb, callback_type="pr_norm")
    res = float(np.linalg.norm(rhs - A @ x) / bnorm)
    return SolveReport(_wrap(K, b, x), count[0], res, "converged" if res <= tol else "maxiter")


def solve(K, b, settings: SolverSettings | None = None) -> SolveReport:
    """CG for symmetric operators, GMRES otherwise; CG breakdown raises."""
    settings = settings or SolverSettings()
    A = _matrix(K)
    symmetric = K.is_symmetric if isinstance(K, StiffnessOperator) else (abs(A - A.T) > 0).nnz == 0
    if symmetric:
        return cg_solve(K, b, settings.tol, settings.maxiter, settings.precond, raise_on_breakdown=True)
    return gmres_solve(K, b, settings.tol, settings.maxiter)
