"""Weighted models and the quantitative geometry operations on them.

A weighted model is a profile together with a radial weight h > 0; the
weighted measure is dmu~ = h^2 dmu, so the effective area function is
S~(r) = h(r)^2 S(r).  All operations below work on S~; the unweighted case
is the unit weight.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import quadrature
from .errors import NumericFailure, UnsupportedError
from .profiles import FULL_LINE, HALF_LINE, RadialProfile

logger = logging.getLogger(__name__)

PARABOLIC = "parabolic"
NONPARABOLIC = "nonparabolic"


class RadialWeight:
    """Positive radial weight h; values are exposed in log space so that
    weights growing like exp(r^alpha) stay usable far beyond overflow."""

    def log_value(self, r):
        raise NotImplementedError

    def dlog_value(self, r):
        raise NotImplementedError

    def value(self, r):
        return np.exp(self.log_value(r))


class UnitWeight(RadialWeight):
    def log_value(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def dlog_value(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def __repr__(self):
        return "<unit weight>"


class AffineWeight(RadialWeight):
    """h(r) = c0 + c1 r, positive on the half line (c0 > 0, c1 >= 0)."""

    def __init__(self, c0: float, c1: float):
        if c0 <= 0 or c1 < 0:
            raise ValueError("affine weight needs c0 > 0 and c1 >= 0")
        self.c0 = float(c0)
        self.c1 = float(c1)

    def log_value(self, r):
        return np.log(self.c0 + self.c1 * np.asarray(r, dtype=float))

    def dlog_value(self, r):
        r = np.asarray(r, dtype=float)
        return self.c1 / (self.c0 + self.c1 * r)

    def value(self, r):
        return self.c0 + self.c1 * np.asarray(r, dtype=float)

    def __repr__(self):
        return f"<affine weight {self.c0} + {self.c1} r>"


class WeightedModel:
    """Profile plus weight; the object every operation takes."""

    def __init__(self, profile: RadialProfile, weight: RadialWeight | None = None):
        self.profile = profile
        self.weight = weight if weight is not None else UnitWeight()

    @property
    def n(self) -> int:
        return self.profile.n

    @property
    def domain(self) -> str:
        return self.profile.domain

    @property
    def r_lo(self) -> float:
        return self.profile.r_lo

    @property
    def r_hi(self) -> float:
        return self.profile.r_hi

    def log_area_weighted(self, r):
        return self.profile.log_area(r) + 2.0 * self.weight.log_value(r)

    def area_weighted(self, r):
        return np.exp(self.log_area_weighted(r))

    def dlog_area_weighted(self, r):
        return self.profile.dlog_area(r) + 2.0 * self.weight.dlog_value(r)

    def area(self, r):
        return self.profile.area(r)

    def __repr__(self):
        return f"WeightedModel({self.profile!r}, {self.weight!r})"


def _scalar_area_weighted(model: WeightedModel) -> Callable[[float], float]:
    def f(r: float) -> float:
        return float(model.area_weighted(np.array(r)))

    return f


def _scalar_inv_area(model: WeightedModel, flip: bool = False) -> Callable[[float], float]:
    def f(r: float) -> float:
        rr = -r if flip else r
        with np.errstate(over="ignore"):
            return float(np.exp(-model.log_area_weighted(np.array(rr))))

    return f


def _volume_lower_limit(model: WeightedModel) -> float:
    return max(0.0, model.r_lo)


def volume(model: WeightedModel, R: float) -> float:
    """Weighted volume V~(R) of the ball {r < R}: the integral of S~ from
    the inner domain edge (0 for half/full-line models) up to R."""
    lo = _volume_lower_limit(model)
    if not R >= lo:
        raise ValueError(f"R must be >= {lo}, got {R}")
    if R > model.r_hi:
        raise ValueError(f"R={R} exceeds profile domain (r_hi={model.r_hi})")
    out = quadrature.adaptive_simpson(_scalar_area_weighted(model), lo, float(R))
    if not np.isfinite(out):
        raise NumericFailure(f"volume integral overflowed at R={R}")
    return out


def log_volume(model: WeightedModel, R: float, lo: float | None = None) -> float:
    """log V~(R); usable when V~ itself overflows."""
    if lo is None:
        lo = _volume_lower_limit(model)
    if not R > lo:
        raise ValueError(f"R must be > {lo}")
    nodes = np.linspace(lo, float(R), 257)
    cum = quadrature.cumulative_log_integral(
        lambda x: model.log_area_weighted(x), nodes,
        max_step=max((R - lo) / 2048.0, 1e-6),
    )
    return float(cum[-1])


@dataclass
class CapacityResult:
    """Capacity of the condenser (closed ball a, open ball b) plus the
    equilibrium potential, harmonic in the annulus with phi(a)=1, phi(b)=0."""

    capacity: float
    a: float
    b: float
    _inv_total: float
    _model: WeightedModel = field(repr=False)

    def potential(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.a - 1e-12) or np.any(r > self.b + 1e-12):
            raise ValueError("potential queried outside [a, b]")
        flat = np.clip(np.atleast_1d(r), self.a, self.b)
        order = np.argsort(flat)
        nodes = np.concatenate(([self.a], flat[order]))
        cum = quadrature.cumulative_integral(
            lambda x: np.exp(-self._model.log_area_weighted(x)), nodes
        )[1:]
        vals = np.empty_like(flat)
        vals[order] = 1.0 - cum / self._inv_total
        out = np.clip(vals, 0.0, 1.0)
        return out.reshape(np.shape(r)) if np.shape(r) else float(out[0])


def capacity_annulus(model: WeightedModel, a: float, b: float) -> CapacityResult:
    """cap(closed ball a, ball b) = (integral_a^b dt/S~)^(-1).

    A divergent integral (pole at r = a with non-integrable 1/S~) raises
    NumericFailure; a >= b raises ValueError.
    """
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if a < _volume_lower_limit(model) and model.domain == HALF_LINE:
        raise ValueError(f"a={a} below domain edge")
    if b > model.r_hi:
        raise ValueError(f"b={b} exceeds profile domain")
    total = quadrature.left_singular_integral(_scalar_inv_area(model), float(a), float(b))
    if not np.isfinite(total) or total <= 0:
        raise NumericFailure(
            f"capacity integral over [{a}, {b}] is divergent; capacity is 0"
        )
    return CapacityResult(capacity=1.0 / total, a=float(a), b=float(b),
                          _inv_total=total, _model=model)


class RadialHarmonic:
    """u(r) = c1 + c2 * integral_{r1}^{r} dt/S~(t); harmonic for the
    weighted radial Laplacian wherever S~ is positive and finite."""

    def __init__(self, model: WeightedModel, c1: float, c2: float, r1: float):
        lo = _volume_lower_limit(model) if model.domain == HALF_LINE else model.r_lo
        if not lo <= r1 <= model.r_hi:
            raise ValueError(f"anchor r1={r1} outside domain")
        self.model = model
        self.c1 = float(c1)
        self.c2 = float(c2)
        self.r1 = float(r1)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        flat = np.atleast_1d(r).astype(float)
        pts = np.unique(np.concatenate((flat, [self.r1])))
        cum = quadrature.cumulative_integral(
            lambda x: np.exp(-self.model.log_area_weighted(x)), pts
        )
        if not np.all(np.isfinite(cum)):
            raise NumericFailure("harmonic integral diverges on the requested range")
        base = cum[np.searchsorted(pts, self.r1)]
        vals = self.c1 + self.c2 * (cum[np.searchsorted(pts, flat)] - base)
        out = vals.reshape(np.shape(r)) if np.shape(r) else float(vals[0])
        return out


def radial_harmonic(model: WeightedModel, c1: float, c2: float, r1: float) -> RadialHarmonic:
    return RadialHarmonic(model, c1, c2, r1)


def classify_parabolicity(model: WeightedModel, end: str = "plus",
                          rel_change: float = 1e-6) -> str:
    """Parabolic iff the tail integral of 1/S~ toward the given end diverges.

    The truncation radius doubles until the integral settles (relative
    change below ``rel_change``, nonparabolic) or keeps growing (parabolic).
    """
    if end not in ("plus", "minus"):
        raise ValueError("end must be 'plus' or 'minus'")
    if end == "minus" and model.domain != FULL_LINE:
        raise UnsupportedError("minus end only exists for full-line models")
    if np.isfinite(model.r_hi) and end == "plus":
        raise UnsupportedError("parabolicity needs an infinite end (table profile)")
    flip = end == "minus"
    start = 1.0 if not flip else 1.0
    out = quadrature.tail_integral(_scalar_inv_area(model, flip=flip), start,
                                   rel_change=rel_change)
    return PARABOLIC if not np.isfinite(out) else NONPARABOLIC


def ricci_radial(model: WeightedModel, r):
    """Radial Ricci (Gauss) curvature -S''/S of the underlying 2-d metric.

    Only defined for n = 2; the weight does not enter the metric.
    """
    if model.n != 2:
        raise UnsupportedError("ricci_radial is only defined for n = 2 models")
    r = np.asarray(r, dtype=float)
    p = model.profile
    return -(p.d2log_area(r) + p.dlog_area(r) ** 2)


@dataclass
class HarnackCheck:
    """Result of the spherical Harnack premise scan."""

    ratio_bound: float
    n_estimate: float
    passed: bool


def check_spherical_harnack_premises(model: WeightedModel, A: float,
                                     r_range: tuple[float, float],
                                     samples: int = 64,
                                     window_samples: int = 96) -> HarnackCheck:
    """Scan the two premises for spherical Harnack coupling on 2-d models.

    ratio_bound: max over sampled r of sup_{t in (r/A, A r)} q(t) / q(r)
    with q = max(S'', 0)/S and the convention 0/0 = 1.
    n_estimate: max over sampled r of (S(r)/r + sqrt(max(S'',0) S)) / log r.
    """
    if model.n != 2:
        raise UnsupportedError("premise check is only defined for n = 2 models")
    if A <= 1:
        raise ValueError("window factor A must be > 1")
    lo, hi = r_range
    if not (1.0 < lo < hi):
        raise ValueError("r_range must satisfy 1 < lo < hi")
    if hi * A > model.r_hi:
        raise ValueError("window exceeds profile domain")
    p = model.profile

    def q(t):
        val = p.d2log_area(t) + p.dlog_area(t) ** 2
        return np.maximum(val, 0.0) * 1.0

    rs = np.geomspace(lo, hi, samples)
    ratio_bound = 0.0
    for r in rs:
        window = np.geomspace(r / A, r * A, window_samples)
        sup_q = float(np.max(q(window)))
        q_r = float(q(np.array(r)))
        if sup_q == 0.0 and q_r == 0.0:
            ratio = 1.0
        elif q_r == 0.0:
            ratio = np.inf
        else:
            ratio = sup_q / q_r
        ratio_bound = max(ratio_bound, ratio)
    area = p.area(rs)
    s2_plus = np.maximum(p.d2_area(rs), 0.0)
    n_estimate = float(np.max((area / rs + np.sqrt(s2_plus * area)) / np.log(rs)))
    passed = np.isfinite(ratio_bound) and np.isfinite(n_estimate)
    return HarnackCheck(ratio_bound=float(ratio_bound), n_estimate=n_estimate,
                        passed=bool(passed))


def fit_volume_exponent(model: WeightedModel, r_range: tuple[float, float],
                        samples: int = 48) -> float:
    """Least-squares slope of log V~(r) against log r over log-spaced radii."""
    lo, hi = r_range
    if not (0 < lo < hi):
        raise ValueError("r_range must satisfy 0 < lo < hi")
    if samples < 32:
        raise ValueError("need at least 32 samples")
    rs = np.geomspace(lo, hi, samples)
    base = _volume_lower_limit(model)
    nodes = np.concatenate(([base], rs))
    cum = quadrature.cumulative_log_integral(
        lambda x: model.log_area_weighted(x), nodes, max_step=min(0.25, lo / 4.0)
    )[1:]
    if not np.all(np.isfinite(cum)):
        raise NumericFailure("volume overflow while fitting growth exponent")
    slope = np.polyfit(np.log(rs), cum, 1)[0]
    return float(slope)
