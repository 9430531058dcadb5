"""Vector-field families described by their coefficient matrix C(x).

A family X = {X_1, ..., X_m} on R^N is stored as a callable returning the
m x N matrix with rows c_j(x), so that Xu = C(x) grad u.  Frames are
evaluated in batches: ``frame(points)`` takes an array of shape (P, N) and
returns shape (P, m, N).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "FieldFamily",
    "HeisenbergParams",
    "euclidean_family",
    "heisenberg_family",
    "custom_family",
    "homogeneous_norm",
    "family_from_config",
]

Frame = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FieldFamily:
    """An immutable family of m vector fields on R^N.

    ``Q`` is the homogeneous dimension declared for the family; it is
    trusted, not measured.
    """

    m: int
    N: int
    frame: Frame = field(repr=False, compare=False)
    Q: float
    label: str
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.m < 1 or self.N < 1:
            raise ValueError(f"invalid family shape m={self.m}, N={self.N}")
        if not self.Q > 2:
            raise ValueError(f"homogeneous dimension must exceed 2, got Q={self.Q}")

    def evaluate(self, points) -> np.ndarray:
        """Frame matrices at ``points`` (shape (P, N) or (N,))."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.N:
            raise ValueError(f"points have dimension {pts.shape[1]}, family {self.label!r} expects {self.N}")
        C = np.asarray(self.frame(pts), dtype=float)
        if C.shape != (pts.shape[0], self.m, self.N):
            raise ValueError(f"frame returned shape {C.shape}, expected {(pts.shape[0], self.m, self.N)}")
        if not np.all(np.isfinite(C)):
            raise ValueError(f"frame of {self.label!r} produced non-finite entries")
        return C[0] if single else C

    def describe(self) -> dict:
        return {"label": self.label, "m": self.m, "N": self.N, "Q": self.Q, **self.params}


@dataclass(frozen=True)
class HeisenbergParams:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"Heisenberg order must be a positive integer, got {self.n}")

    @property
    def N(self) -> int:
        return 2 * self.n + 1

    @property
    def m(self) -> int:
        return 2 * self.n

    @property
    def Q(self) -> int:
        return 2 * self.n + 2


def euclidean_family(N: int) -> FieldFamily:
    """The coordinate fields d/dx_1, ..., d/dx_N, with Q = N.

    N must be at least 3 so that Q > 2.
    """
    N = int(N)
    if N <= 2:
        raise ValueError(f"euclidean family needs N >= 3 (Q = N > 2), got N={N}")
    eye = np.eye(N)

    def frame(pts):
        return np.broadcast_to(eye, (pts.shape[0], N, N)).copy()

    return FieldFamily(m=N, N=N, frame=frame, Q=float(N), label=f"euclidean-{N}", params={"family": "euclidean", "dim": N})


def heisenberg_family(params: HeisenbergParams | int) -> FieldFamily:
    """Horizontal fields of the Heisenberg group H^n on R^(2n+1).

    Coordinates are (x_1..x_n, y_1..y_n, t).  Row i is X_i = d/dx_i + 2 y_i d/dt
    and row n+i is Y_i = d/dy_i - 2 x_i d/dt.
    """
    if not isinstance(params, HeisenbergParams):
        params = HeisenbergParams(params)
    n = params.n
    N, m = params.N, params.m
    base = np.zeros((m, N))
    base[:, :m] = np.eye(m)

    def frame(pts):
        C = np.broadcast_to(base, (pts.shape[0], m, N)).copy()
        x = pts[:, :n]
        y = pts[:, n:2 * n]
        C[:, :n, -1] = 2.0 * y
        C[:, n:, -1] = -2.0 * x
        return C

    return FieldFamily(m=m, N=N, frame=frame, Q=float(params.Q), label=f"heisenberg-{n}", params={"family": "heisenberg", "n": n})


def custom_family(frame: Frame, m: int, N: int, Q: float, label: str = "custom") -> FieldFamily:
    """Wrap a user frame; the declared ``Q`` is recorded as given."""
    return FieldFamily(m=m, N=N, frame=frame, Q=float(Q), label=label, params={"family": "custom"})


def homogeneous_norm(p) -> np.ndarray | float:
    """Gauge norm ((|x|^2 + |y|^2)^2 + t^2)^(1/4) on H^n.

    Accepts a single point of length 2n+1 or an array of shape (P, 2n+1).
    """
    pts = np.asarray(p, dtype=float)
    dim = pts.shape[-1] if pts.ndim else 0
    if pts.ndim not in (1, 2) or dim < 3 or dim % 2 == 0:
        raise ValueError(f"homogeneous norm expects points of odd dimension 2n+1 >= 3, got shape {pts.shape}")
    horiz = np.sum(pts[..., :-1] ** 2, axis=-1)
    t = pts[..., -1]
    out = (horiz ** 2 + t ** 2) ** 0.25
    return float(out) if pts.ndim == 1 else out


def family_from_config(cfg: dict) -> FieldFamily:
    kind = cfg.get("family")
    if kind == "euclidean":
        return euclidean_family(cfg["dim"])
    if kind == "heisenberg":
        return heisenberg_family(HeisenbergParams(cfg["n"]))
    raise ValueError(f"unknown family {kind!r}; expected 'euclidean' or 'heisenberg'")
