"""Isoperimetric profiles and the functional machinery that combines them.

The half-line profile of a weighted model with nondecreasing effective area
is J(v) = S~(V~^{-1}(v)): the boundary area of the half-line set of given
volume.  Product-type lower bounds combine a half-line profile with the
fiber profile through a two-variable infimum; the closed-form asymptotic
profile mirrors the transformed exp_alpha family.  Profiles are exposed in
log-volume form as well, since downstream spectral integrals walk volumes
far beyond the floating-point range.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import NumericFailure, PreconditionError
from .model import WeightedModel
from .monotone import CONSTANT, MonotoneTab, InversePair

logger = logging.getLogger(__name__)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class IsoProfile:
    """Isoperimetric profile J(v) on (0, total_mass)."""

    kind: str = "base"
    total_mass: float = np.inf
    j_over_v_nonincreasing: bool = False

    def value(self, v):
        raise NotImplementedError

    def log_value(self, log_v):
        """log J at log v; defined wherever value is, but usable when v
        itself would overflow."""
        log_v = np.asarray(log_v, dtype=float)
        with np.errstate(over="ignore"):
            out = np.log(self.value(np.exp(log_v)))
        return out if out.shape else float(out)

    def __call__(self, v):
        return self.value(v)


class TableIsoProfile(IsoProfile):
    """Profile tabulated as (log v, log J) with linear interpolation.

    Below the table the first value holds (half-line profiles flatten to
    S~(r_start) as v -> 0); above the table queries raise, since nothing is
    known there.
    """

    kind = "halfline_table"

    def __init__(self, log_v: np.ndarray, log_j: np.ndarray,
                 total_mass: float, j_over_v_nonincreasing: bool,
                 r_start: float = 0.0, r_max: float = np.inf):
        if np.any(np.diff(log_v) <= 0):
            raise ValueError("log_v must be strictly increasing")
        self._log_v = np.asarray(log_v, dtype=float)
        self._log_j = np.asarray(log_j, dtype=float)
        self.total_mass = float(total_mass)
        self.j_over_v_nonincreasing = bool(j_over_v_nonincreasing)
        self.r_start = float(r_start)
        self.r_max = float(r_max)

    @property
    def log_v_max(self) -> float:
        return float(self._log_v[-1])

    def log_value(self, log_v):
        log_v = np.asarray(log_v, dtype=float)
        if np.any(log_v > self._log_v[-1] + 1e-9):
            raise ValueError(
                f"volume beyond tabulated range (log v max {self._log_v[-1]:.3f})"
            )
        out = np.interp(log_v, self._log_v, self._log_j)
        return out if out.shape else float(out)

    def value(self, v):
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0):
            raise ValueError("volume must be positive")
        out = np.exp(self.log_value(np.log(v)))
        return out if np.shape(v) else float(out)


def profile_halfline(model: WeightedModel, r_start: float | None = None,
                     v_max: float = 1.0e12, points: int = 2048) -> TableIsoProfile:
    """Half-line isoperimetric profile J = S~ composed with V~^{-1}.

    Requires S~ nondecreasing on [r_start, +inf); violations raise with the
    offending radius.  The table extends until the cumulative volume covers
    ``v_max`` (or the area reaches the floating-point ceiling, whichever is
    first).
    """
    if r_start is None:
        r_start = max(0.0, model.r_lo)
    if r_start < model.r_lo:
        raise ValueError(f"r_start={r_start} below profile domain")
    log_v_target = math.log(v_max)

    # find a right endpoint covering the requested volume
    r_max = min(model.r_hi, r_start + 4.0)
    for _ in range(64):
        top = model.log_area_weighted(np.array(r_max))
        if r_max >= model.r_hi or top > 660.0:
            break
        if top + math.log(max(r_max - r_start, 1.0)) > log_v_target + 1.0:
            break
        r_max = min(model.r_hi, r_max * 2.0)

    offs = np.geomspace(1e-9, r_max - r_start, points)
    rs = np.concatenate(([r_start], r_start + offs))
    with np.errstate(divide="ignore"):
        log_s = model.log_area_weighted(rs)
    drop = np.diff(log_s)
    bad = np.nonzero(drop < -1e-7)[0]
    if bad.size:
        raise PreconditionError(
            f"S~ is decreasing near r={rs[bad[0] + 1]:.6g}; half-line profile "
            "needs a nondecreasing effective area"
        )
    log_vv = quadrature.cumulative_log_integral(
        lambda x: model.log_area_weighted(x), rs
    )
    log_v, log_j = log_vv[1:], log_s[1:]
    keep = np.concatenate(([True], np.diff(log_v) > 1e-13))
    log_v, log_j = log_v[keep], log_j[keep]
    ratio = log_j - log_v
    flag = bool(np.all(np.diff(ratio) <= 1e-7))
    total = np.inf if not np.isfinite(model.r_hi) else float(np.exp(log_v[-1]))
    return TableIsoProfile(log_v, log_j, total, flag, r_start=r_start,
                           r_max=float(rs[-1]))


def monotone_envelope(profile: TableIsoProfile) -> TableIsoProfile:
    """Largest minorant of a tabulated profile with J(v)/v nonincreasing.

    Replaces J(v)/v by its running infimum in v.  The result is still a
    lower isoperimetric function (it only ever decreases J), so its
    Faber-Krahn function stays valid; useful when a transformed area has a
    small non-monotone wiggle at moderate volumes.
    """
    ratio = np.minimum.accumulate(profile._log_j - profile._log_v)
    return TableIsoProfile(profile._log_v, profile._log_v + ratio,
                           profile.total_mass, True,
                           r_start=profile.r_start, r_max=profile.r_max)


class SphereIsoProfile(IsoProfile):
    """Mirror-symmetric profile c_n * min(v, 1-v)^((n-2)/(n-1)) on (0, 1).

    The default constant is the small-cap Euclidean constant under the
    unit-mass normalization of the sphere measure.
    """

    kind = "sphere"
    total_mass = 1.0
    j_over_v_nonincreasing = True

    def __init__(self, n: int, c_n: float | None = None):
        if n < 2:
            raise ValueError("dimension n must be >= 2")
        self.n = int(n)
        if c_n is None:
            k = n - 1
            omega = math.pi ** (k / 2.0) / math.gamma(k / 2.0 + 1.0)
            sigma = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
            c_n = k * omega ** (1.0 / k) * sigma ** (-1.0 / k)
        self.c_n = float(c_n)

    def value(self, v):
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0) or np.any(v >= 1):
            raise ValueError("sphere profile is defined on (0, 1)")
        expo = (self.n - 2.0) / (self.n - 1.0)
        out = self.c_n * np.minimum(v, 1.0 - v) ** expo
        return out if np.shape(v) else float(out)


def profile_sphere(n: int, c_n: float | None = None) -> SphereIsoProfile:
    return SphereIsoProfile(n, c_n)


class AsymptoticIsoProfile(IsoProfile):
    """Closed-form profile of the transformed exp_alpha end:
    J(w) = c~ w / (log w)^((1-alpha)/alpha) for w >= 2 and the euclidean
    branch c~ c' w^((n-1)/n) below, with c' fixed by continuity at w = 2.
    """

    kind = "asymptotic"
    total_mass = np.inf
    j_over_v_nonincreasing = True

    def __init__(self, alpha: float, n: int, c_tilde: float = 1.0):
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        if n < 2:
            raise ValueError("dimension n must be >= 2")
        if c_tilde <= 0:
            raise ValueError("c_tilde must be positive")
        self.alpha = float(alpha)
        self.n = int(n)
        self.c_tilde = float(c_tilde)
        self.exponent = (1.0 - alpha) / alpha
        self.c_prime = 2.0 ** (1.0 / n) / math.log(2.0) ** self.exponent

    def log_value(self, log_v):
        log_v = np.asarray(log_v, dtype=float)
        lv2 = math.log(2.0)
        big = np.log(self.c_tilde) + log_v - self.exponent * np.log(
            np.maximum(log_v, lv2)
        )
        small = (
            np.log(self.c_tilde * self.c_prime) + (self.n - 1.0) / self.n * log_v
        )
        out = np.where(log_v >= lv2, big, small)
        return out if out.shape else float(out)

    def value(self, v):
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0):
            raise ValueError("volume must be positive")
        out = np.exp(self.log_value(np.log(v)))
        return out if np.shape(v) else float(out)


def asymptotic_profile(alpha: float, n: int, c_tilde: float = 1.0) -> AsymptoticIsoProfile:
    return AsymptoticIsoProfile(alpha, n, c_tilde)


def _check_increasing(vals: np.ndarray, label: str) -> None:
    scale = np.maximum(np.abs(vals[:-1]), 1e-300)
    if np.any(np.diff(vals) < -1e-9 * scale):
        raise PreconditionError(f"{label} must be nondecreasing")


def _check_ratio_decreasing(xs: np.ndarray, vals: np.ndarray, label: str) -> None:
    ratio = vals / xs
    scale = np.maximum(np.abs(ratio[:-1]), 1e-300)
    if np.any(np.diff(ratio) > 1e-9 * scale):
        raise PreconditionError(f"{label}(x)/x must be nonincreasing")


def check_infimum_hypotheses(f, g, P: float, v: float, samples: int = 256) -> None:
    """Sampled validation of the two-variable infimum hypotheses:
    f, g nondecreasing; f(x)/x and g(y)/y nonincreasing."""
    ys = np.geomspace(P / 2.0 * 1e-6, P / 2.0, samples)
    gy = np.asarray([float(g(y)) for y in ys])
    _check_increasing(gy, "g")
    _check_ratio_decreasing(ys, gy, "g")
    xs = np.geomspace(2.0 * v / P * 1e-3, v / ys[0], samples)
    fx = np.asarray([float(f(x)) for x in xs])
    _check_increasing(fx, "f")
    _check_ratio_decreasing(xs, fx, "f")


def h0_inf(f, g, P: float, v: float, validate: bool = True,
           grid: int = 512, rel_tol: float = 1e-6) -> float:
    """inf over {x y = v, 0 < y <= P/2} of f(x) y + g(y) x.

    Log-grid scan over y followed by golden-section refinement of the
    bracketing interval; the grid extends downward when the edge wins.
    """
    if P <= 0 or v <= 0:
        raise ValueError("need P > 0 and v > 0")
    if validate:
        check_infimum_hypotheses(f, g, P, v)

    def objective(y: float) -> float:
        x = v / y
        try:
            return float(f(x)) * y + float(g(y)) * x
        except ValueError:
            # x beyond the tabulated range of f: treat as out of play
            return math.inf

    y_hi = P / 2.0
    y_lo = y_hi * 1e-8
    for _ in range(4):
        ys = np.geomspace(y_lo, y_hi, grid)
        vals = np.asarray([objective(y) for y in ys])
        k = int(np.argmin(vals))
        if not np.isfinite(vals[k]):
            raise NumericFailure("infimum objective not evaluable on the y-grid")
        if k > 0 or y_lo <= y_hi * 1e-15:
            break
        y_lo *= 1e-4
    lo = ys[max(k - 1, 0)]
    hi = ys[min(k + 1, grid - 1)]

    # golden-section refinement on [lo, hi]
    a, b = math.log(lo), math.log(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = objective(math.exp(c)), objective(math.exp(d))
    best = min(vals[k], fc, fd)
    for _ in range(200):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = objective(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = objective(math.exp(d))
        new_best = min(best, fc, fd)
        if abs(new_best - best) <= rel_tol * abs(new_best) and b - a < 0.2:
            best = new_best
            break
        best = new_best
    return float(best)


def functional_lower_bound(f, g, P: float, v: float, validate: bool = True) -> float:
    """min(h0/6, f(v/P) P / 8): the combined lower bound for the sum of the
    two rearranged integrals over all admissible inverse pairs."""
    h0 = h0_inf(f, g, P, v, validate=validate)
    direct = float(f(v / P)) * P / 8.0
    return min(h0 / 6.0, direct)


def functional_integrals(pair: InversePair, f, g) -> tuple[float, float]:
    """Exact integrals (int f(phi), int g(phi_star)) for a step pair.

    The integrand is dropped where the function vanishes (empty sets carry
    no boundary), matching the convention f(0) = g(0) = 0.
    """
    out = []
    for tab, fn in ((pair.phi, f), (pair.phi_star, g)):
        if tab.interpolation != CONSTANT:
            raise ValueError("exact functional integrals need step tabs")
        heights = tab.values[:-1]
        widths = np.diff(tab.breakpoints)
        total = 0.0
        for h, w in zip(heights, widths):
            if h > 0 and w > 0:
                total += float(fn(h)) * w
        out.append(total)
    return out[0], out[1]


class WarpedIsoProfile(IsoProfile):
    """Profile of a warped product from its two factor profiles:
    c * min(J0(v)/6, J1(v/P) P/8) with J0 the two-variable infimum and
    c = min(1, 1/C0)/2 for fibers scaled by psi <= C0."""

    kind = "warped_product"
    total_mass = np.inf

    def __init__(self, j_base: IsoProfile, j_fiber: IsoProfile, C0: float,
                 c: float | None = None):
        if not np.isfinite(j_fiber.total_mass):
            raise PreconditionError("fiber profile must have finite total mass")
        if np.isfinite(j_base.total_mass):
            raise PreconditionError("base profile must have infinite total mass")
        if C0 <= 0:
            raise ValueError("C0 must be positive")
        self.j_base = j_base
        self.j_fiber = j_fiber
        self.C0 = float(C0)
        self.c = 0.5 * min(1.0, 1.0 / C0) if c is None else float(c)
        self.P = float(j_fiber.total_mass)
        # validate the infimum hypotheses once at a reference volume
        check_infimum_hypotheses(j_base.value, j_fiber.value, self.P, 1.0)
        ys = np.linspace(self.P * 1e-3, self.P * (1 - 1e-3), 64)
        mirror = np.asarray([float(j_fiber.value(y)) for y in ys])
        if not np.allclose(mirror, mirror[::-1], rtol=1e-8, atol=1e-12):
            raise PreconditionError("fiber profile must be symmetric about P/2")
        self.j_over_v_nonincreasing = bool(
            j_base.j_over_v_nonincreasing and j_fiber.j_over_v_nonincreasing
        )

    def value(self, v):
        v_arr = np.atleast_1d(np.asarray(v, dtype=float))
        if np.any(v_arr <= 0):
            raise ValueError("volume must be positive")
        out = np.empty_like(v_arr)
        for i, vv in enumerate(v_arr):
            h0 = h0_inf(self.j_base.value, self.j_fiber.value, self.P, float(vv),
                        validate=False)
            direct = float(self.j_base.value(vv / self.P)) * self.P / 8.0
            out[i] = self.c * min(h0 / 6.0, direct)
        return out if np.shape(v) else float(out[0])


def warped_product_profile(j_base: IsoProfile, j_fiber: IsoProfile, C0: float,
                           c: float | None = None) -> WarpedIsoProfile:
    return WarpedIsoProfile(j_base, j_fiber, C0, c)
