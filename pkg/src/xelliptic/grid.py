"""Masked uniform grids and the discrete (X-)gradient.

Cells are indexed by multi-indices on a box split into ``res`` cells per
axis; a cell is interior when its center lies in the domain.  Functions
are stored on interior cells only and extended by zero elsewhere, which is
how the homogeneous Dirichlet condition enters.

Forward differences of a zero-extended function are nonzero on the
interior cells and on the *ghost layer*: exterior cells with an interior
forward neighbour.  Gradient-type fields therefore live on the support
``interior + ghost`` (interior rows first), so that the discrete energy
sees both sides of the boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .fields import FieldFamily, homogeneous_norm

__all__ = [
    "DiscreteDomain",
    "ScalarField",
    "FrameField",
    "box_domain",
    "build_ball_domain",
    "grad_h",
    "x_grad_h",
    "difference_matrices",
    "x_gradient_matrices",
]


def _as_tuple(val, N, cast):
    if np.isscalar(val):
        return (cast(val),) * N
    out = tuple(cast(v) for v in val)
    if len(out) != N:
        raise ValueError(f"expected {N} per-axis entries, got {len(out)}")
    return out


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    bounds: tuple
    res: tuple
    mask: np.ndarray = field(repr=False)
    label: str = "domain"

    def __post_init__(self):
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        res = tuple(int(r) for r in self.res)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "res", res)
        if len(bounds) != len(res):
            raise ValueError("bounds and res must have the same length")
        if any(b <= a for a, b in bounds):
            raise ValueError(f"degenerate bounds {bounds}")
        if any(r < 1 for r in res):
            raise ValueError(f"resolution must be >= 1 per axis, got {res}")
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != res:
            raise ValueError(f"mask shape {mask.shape} does not match res {res}")
        if not mask.any():
            raise ValueError("domain has no interior cells; resolution too coarse")
        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @property
    def N(self) -> int:
        return len(self.res)

    @cached_property
    def h(self) -> np.ndarray:
        return np.array([(b - a) / r for (a, b), r in zip(self.bounds, self.res)])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @cached_property
    def interior(self) -> np.ndarray:
        """Multi-indices of interior cells in C order; row i is cell i."""
        return np.argwhere(self.mask)

    @property
    def n_int(self) -> int:
        return self.interior.shape[0]

    @property
    def measure(self) -> float:
        return self.n_int * self.cell_volume

    @cached_property
    def _padded(self) -> np.ndarray:
        # one-cell padding on each side so ghost cells outside the box have indices
        return np.pad(self.mask, 1, constant_values=False)

    @cached_property
    def ghost(self) -> np.ndarray:
        """Exterior cells (possibly outside the box) with an interior forward neighbour."""
        pm = self._padded
        near = np.zeros_like(pm)
        for k in range(self.N):
            shifted = np.zeros_like(pm)
            src = [slice(None)] * self.N
            dst = [slice(None)] * self.N
            src[k] = slice(1, None)
            dst[k] = slice(None, -1)
            shifted[tuple(dst)] = pm[tuple(src)]
            near |= shifted
        return np.argwhere(near & ~pm) - 1

    @property
    def n_support(self) -> int:
        return self.n_int + self.ghost.shape[0]

    @cached_property
    def support(self) -> np.ndarray:
        return np.vstack([self.interior, self.ghost])

    @cached_property
    def _lookup(self) -> np.ndarray:
        table = np.full(self._padded.shape, -1, dtype=np.int64)
        sup = self.support + 1
        table[tuple(sup.T)] = np.arange(sup.shape[0])
        return table

    def index_of(self, multi_index) -> np.ndarray:
        """Support row of each multi-index (-1 where the cell carries no value)."""
        mi = np.atleast_2d(np.asarray(multi_index, dtype=np.int64)) + 1
        shape = np.array(self._lookup.shape)
        ok = np.all((mi >= 0) & (mi < shape), axis=1)
        out = np.full(mi.shape[0], -1, dtype=np.int64)
        out[ok] = self._lookup[tuple(mi[ok].T)]
        return out

    def centers_of(self, multi_index) -> np.ndarray:
        lo = np.array([a for a, _ in self.bounds], dtype=float)
        hi = np.array([b for _, b in self.bounds], dtype=float)
        n = np.asarray(self.res, dtype=float)
        # integer numerator around the midpoint: mirror-image cells round identically
        off = (2.0 * np.asarray(multi_index, dtype=float) + 1.0 - n) / (2.0 * n)
        return 0.5 * (lo + hi) + off * (hi - lo)

    @cached_property
    def centers(self) -> np.ndarray:
        """Centers of interior cells, shape (n_int, N)."""
        return self.centers_of(self.interior)

    @cached_property
    def support_centers(self) -> np.ndarray:
        return self.centers_of(self.support)

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.n_int))

    def sample(self, func) -> "ScalarField":
        """Evaluate a vectorised ``func(points)`` at interior cell centers."""
        return ScalarField(self, np.asarray(func(self.centers), dtype=float).reshape(self.n_int))

    def describe(self) -> dict:
        return {
            "label": self.label,
            "bounds": [list(b) for b in self.bounds],
            "res": list(self.res),
            "h": self.h.tolist(),
            "n_int": self.n_int,
            "n_ghost": int(self.ghost.shape[0]),
            "measure": self.measure,
        }


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One value per interior cell; zero outside."""

    domain: DiscreteDomain
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.shape[0] != self.domain.n_int:
            raise ValueError(f"expected {self.domain.n_int} values, got {vals.shape[0]}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("scalar field has non-finite entries")
        object.__setattr__(self, "values", vals)

    def __add__(self, other):
        return ScalarField(self.domain, self.values + _values(other))

    def __sub__(self, other):
        return ScalarField(self.domain, self.values - _values(other))

    def __mul__(self, c):
        return ScalarField(self.domain, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.domain, -self.values)

    def to_csv(self, path) -> None:
        d = self.domain
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"i{k}" for k in range(d.N)] + [f"x{k}" for k in range(d.N)] + ["value"])
            for idx, c, v in zip(d.interior, d.centers, self.values):
                w.writerow([*map(int, idx), *map(repr, map(float, c)), repr(float(v))])

    def to_binary(self, path) -> None:
        self.values.astype("<f8").tofile(path)

    @classmethod
    def from_binary(cls, domain: DiscreteDomain, path) -> "ScalarField":
        return cls(domain, np.fromfile(path, dtype="<f8"))


def _values(obj):
    return obj.values if isinstance(obj, ScalarField) else np.asarray(obj, dtype=float)


@dataclass(frozen=True, eq=False)
class FrameField:
    """An m-vector per support cell (interior rows first, then the ghost layer).

    Inputs of interior length are zero-padded onto the ghost layer.
    """

    domain: DiscreteDomain
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError(f"frame field values must be 2-D, got shape {vals.shape}")
        d = self.domain
        if vals.shape[0] == d.n_int and d.n_support != d.n_int:
            vals = np.vstack([vals, np.zeros((d.n_support - d.n_int, vals.shape[1]))])
        if vals.shape[0] != d.n_support:
            raise ValueError(f"expected {d.n_int} or {d.n_support} rows, got {vals.shape[0]}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("frame field has non-finite entries")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def interior(self) -> np.ndarray:
        return self.values[: self.domain.n_int]

    def magnitude(self) -> np.ndarray:
        """Euclidean length per support cell."""
        return np.linalg.norm(self.values, axis=1)

    def weighted_sq_norm(self) -> float:
        return float(self.domain.cell_volume * np.sum(self.values ** 2))

    def to_csv(self, path) -> None:
        d = self.domain
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"i{k}" for k in range(d.N)] + [f"x{k}" for k in range(d.N)] + [f"v{j}" for j in range(self.m)])
            for idx, c, v in zip(d.support, d.support_centers, self.values):
                w.writerow([*map(int, idx), *map(repr, map(float, c)), *map(repr, map(float, v))])


def box_domain(bounds: Sequence, res, label: str = "box") -> DiscreteDomain:
    """A fully interior box."""
    bounds = [tuple(b) for b in bounds]
    res = _as_tuple(res, len(bounds), int)
    return DiscreteDomain(bounds, res, np.ones(res, dtype=bool), label=label)


def build_ball_domain(family: FieldFamily, radius: float, res, gauge: str = "euclidean") -> DiscreteDomain:
    """Staircase approximation of a gauge ball centred at the origin.

    The box is the tightest one containing the ball: [-r, r] per axis for
    the Euclidean gauge, and [-r, r] horizontally with [-r^2, r^2] in t for
    the Heisenberg gauge.  A cell is interior iff its center has gauge
    norm strictly below ``radius``.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    N = family.N
    res = _as_tuple(res, N, int)
    if gauge == "euclidean":
        bounds = [(-radius, radius)] * N
        norm = lambda pts: np.linalg.norm(pts, axis=1)  # noqa: E731
    elif gauge == "heisenberg":
        if family.params.get("family") != "heisenberg":
            raise ValueError("heisenberg gauge requires a Heisenberg family")
        bounds = [(-radius, radius)] * (N - 1) + [(-radius ** 2, radius ** 2)]
        norm = homogeneous_norm
    else:
        raise ValueError(f"unknown gauge {gauge!r}")
    lo = np.array([a for a, _ in bounds])
    h = np.array([(b - a) / r for (a, b), r in zip(bounds, res)])
    axes = [lo[k] + (np.arange(res[k]) + 0.5) * h[k] for k in range(N)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, N)
    mask = (norm(pts) < radius).reshape(res)
    if not mask.any():
        raise ValueError(f"no cell center inside the {gauge} ball at res {res}; refine the grid")
    return DiscreteDomain(bounds, res, mask, label=f"{gauge}-ball-r{radius:g}")


def difference_matrices(domain: DiscreteDomain) -> list:
    """Forward differences D_k, each of shape (n_support, n_int).

    (D_k u)(c) = (u(c + e_k) - u(c)) / h_k with u = 0 off the interior.
    """
    cached = domain.__dict__.get("_diff_mats")
    if cached is not None:
        return cached
    sup = domain.support
    n_sup, n_int = domain.n_support, domain.n_int
    rows_self = np.arange(n_int)
    mats = []
    for k in range(domain.N):
        shift = np.zeros(domain.N, dtype=np.int64)
        shift[k] = 1
        fwd = domain.index_of(sup + shift)
        fwd_int = (fwd >= 0) & (fwd < n_int)
        inv_h = 1.0 / domain.h[k]
        rows = np.concatenate([np.flatnonzero(fwd_int), rows_self])
        cols = np.concatenate([fwd[fwd_int], rows_self])
        vals = np.concatenate([np.full(fwd_int.sum(), inv_h), np.full(n_int, -inv_h)])
        mats.append(sp.csr_matrix((vals, (rows, cols)), shape=(n_sup, n_int)))
    domain.__dict__["_diff_mats"] = mats
    return mats


def x_gradient_matrices(domain: DiscreteDomain, family: FieldFamily) -> list:
    """B_j = sum_k diag(c_jk(x_cell)) D_k for j = 1..m, frame taken at cell centers."""
    if family.N != domain.N:
        raise ValueError(f"family {family.label!r} has N={family.N}, domain has N={domain.N}")
    D = difference_matrices(domain)
    C = family.evaluate(domain.support_centers)
    mats = []
    for j in range(family.m):
        Bj = sp.csr_matrix((domain.n_support, domain.n_int))
        for k in range(domain.N):
            c = C[:, j, k]
            if np.any(c != 0):
                Bj = Bj + sp.diags(c) @ D[k]
        mats.append(Bj.tocsr())
    return mats


def grad_h(u: ScalarField) -> FrameField:
    D = difference_matrices(u.domain)
    return FrameField(u.domain, np.column_stack([Dk @ u.values for Dk in D]))


def x_grad_h(u: ScalarField, family: FieldFamily) -> FrameField:
    if family.N != u.domain.N:
        raise ValueError(f"family {family.label!r} has N={family.N}, domain has N={u.domain.N}")
    g = grad_h(u).values
    C = family.evaluate(u.domain.support_centers)
    return FrameField(u.domain, np.einsum("pjk,pk->pj", C, g))
