"""Function-space diagnostics on cell-wise constant fields.

Every function here accepts a :class:`ScalarField`, a :class:`FrameField`
(reduced to its per-cell magnitude over the gradient support), or a
``(values, cell_volume)`` pair.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import FrameField, ScalarField

__all__ = [
    "NormReport",
    "TailFit",
    "samples",
    "lp_norm",
    "linf_norm",
    "distribution_function",
    "distribution_samples",
    "weak_lp_norm",
    "fit_tail_exponent",
    "sobolev_exponents",
    "norm_report",
]


def samples(u) -> tuple[np.ndarray, float]:
    """Absolute values and cell volume of ``u``."""
    if isinstance(u, ScalarField):
        return np.abs(u.values), u.domain.cell_volume
    if isinstance(u, FrameField):
        return u.magnitude(), u.domain.cell_volume
    vals, vol = u
    return np.abs(np.asarray(vals, dtype=float).reshape(-1)), float(vol)


def lp_norm(u, p: float) -> float:
    if not p >= 1 or math.isinf(p):
        raise ValueError(f"lp_norm needs finite p >= 1, got {p}")
    a, vol = samples(u)
    if not a.size or a.max() == 0:
        return 0.0
    # rescale by the max to keep |u|^p finite for large p
    amax = a.max()
    return float(amax * (vol * np.sum((a / amax) ** p)) ** (1.0 / p))


def linf_norm(u) -> float:
    a, _ = samples(u)
    return float(a.max()) if a.size else 0.0


def distribution_function(u, lam: float) -> float:
    """Measure of {|u| >= lam}."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    a, vol = samples(u)
    return float(vol * np.count_nonzero(a >= lam))


def distribution_samples(u) -> tuple[np.ndarray, np.ndarray]:
    """Distinct positive magnitudes (ascending) and the measure of {|u| >= each}."""
    a, vol = samples(u)
    levels, counts = np.unique(a[a > 0], return_counts=True)
    # measure of {|u| >= levels[i]} is the count of samples at or above it
    measure = vol * np.cumsum(counts[::-1])[::-1]
    return levels, measure.astype(float)


def weak_lp_norm(u, p: float) -> float:
    """Marcinkiewicz norm sup_lam lam * |{|u| >= lam}|^(1/p).

    For a cell-wise constant field the supremum is attained at one of the
    realised magnitudes, so only those are scanned.
    """
    if not p >= 1:
        raise ValueError(f"weak_lp_norm needs p >= 1, got {p}")
    levels, measure = distribution_samples(u)
    if not levels.size:
        return 0.0
    return float(np.max(levels * measure ** (1.0 / p)))


@dataclass
class TailFit:
    slope: float
    residual: float
    lam_range: tuple
    quantiles: tuple
    n_points: int

    def as_dict(self) -> dict:
        return asdict(self)


def fit_tail_exponent(u, quantiles: tuple = (0.80, 0.99), min_points: int = 10) -> TailFit:
    """Least-squares slope of log |{|u| >= lam}| against log lam.

    The fit uses the distinct magnitudes between the given quantiles of the
    sorted distinct values.  ``residual`` is the RMS misfit of the log
    measure divided by the spread of log lam over the window.
    """
    lo, hi = quantiles
    if not 0 <= lo < hi <= 1:
        raise ValueError(f"invalid quantile window {quantiles}")
    levels, measure = distribution_samples(u)
    k = levels.size
    i0 = int(math.floor(lo * (k - 1)))
    i1 = int(math.ceil(hi * (k - 1)))
    window = slice(i0, i1 + 1)
    lam = levels[window]
    mu = measure[window]
    if lam.size < min_points:
        raise ValueError(f"need at least {min_points} distinct magnitudes in the fit window, found {lam.size}")
    x = np.log(lam)
    y = np.log(mu)
    slope, icpt = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    spread = float(x.max() - x.min())
    return TailFit(float(slope), rms / spread if spread > 0 else float("inf"), (float(lam[0]), float(lam[-1])),
                   (lo, hi), int(lam.size))


def sobolev_exponents(p: float, Q: float) -> tuple:
    """(p*, p_*, p**) with absent entries as None.

    p* = pQ/(Q-p) for p < Q; p_* = pQ/(Q(p-1)+p); p** = pQ/(Q-2p) for p < Q/2.
    """
    if not p >= 1:
        raise ValueError(f"need p >= 1, got {p}")
    if not Q > 2:
        raise ValueError(f"need Q > 2, got {Q}")
    if math.isinf(p):
        return None, Q / (Q - 1), None
    p_star = p * Q / (Q - p) if p < Q else None
    p_lower = p * Q / (Q * (p - 1) + p)
    p_dstar = p * Q / (Q - 2 * p) if p < Q / 2 else None
    return p_star, p_lower, p_dstar


@dataclass
class NormReport:
    lp: dict = field(default_factory=dict)
    linf: float = 0.0
    dist_samples: list = field(default_factory=list)
    weak_norm: dict = field(default_factory=dict)
    tail_exponent: dict | None = None
    measure: float = 0.0

    def to_dict(self, include_samples: bool = False) -> dict:
        d = {
            "lp": {str(k): v for k, v in self.lp.items()},
            "linf": self.linf,
            "weak_norm": {str(k): v for k, v in self.weak_norm.items()},
            "tail_exponent": self.tail_exponent,
            "measure": self.measure,
            "n_dist_samples": len(self.dist_samples),
        }
        if include_samples:
            d["dist_samples"] = [list(s) for s in self.dist_samples]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(include_samples=True), **kw)

    def dist_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "measure"])
            for lam, mu in self.dist_samples:
                w.writerow([repr(lam), repr(mu)])


def norm_report(u, lp_exponents=(1.0, 2.0), weak_exponents=(), tail_quantiles: tuple | None = (0.80, 0.99)) -> NormReport:
    a, vol = samples(u)
    levels, measure = distribution_samples(u)
    rep = NormReport(
        lp={p: lp_norm(u, p) for p in lp_exponents},
        linf=linf_norm(u),
        dist_samples=[(float(l), float(m)) for l, m in zip(levels, measure)],
        weak_norm={p: weak_lp_norm(u, p) for p in weak_exponents},
        measure=float(vol * a.size),
    )
    if tail_quantiles is not None:
        try:
            rep.tail_exponent = fit_tail_exponent(u, tail_quantiles).as_dict()
        except ValueError as exc:
            rep.tail_exponent = {"error": str(exc)}
    return rep
