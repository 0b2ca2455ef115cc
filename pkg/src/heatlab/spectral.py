"""Faber-Krahn functions, smallest eigenvalues, and heat-kernel bounds.

A Faber-Krahn function Lambda bounds the smallest Dirichlet eigenvalue of
every precompact set through its measure, lambda_1(Omega) >= Lambda(mu(Omega)).
Solving t = integral_0^gamma dv / (v Lambda(v)) for gamma turns that into the
on-diagonal upper bound sup_r q_t(r, r) <= 4 / gamma(t/2), and a trace
argument on balls gives the matching lower bound
sup_r q_t(r, r) >= (1 / V(R)) exp(-lambda_1(B_R) t), optimized over R.

``two_end_pipeline`` chains the whole machinery for a two-end model: build
the harmonic weight, read off the isoperimetric profiles of both ends, glue
their Faber-Krahn functions, invert gamma, and pit the resulting envelope
against the finite-difference kernel of the transformed model.
"""

from __future__ import annotations

import math
from bisect import bisect_left, insort
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize_scalar

from . import model as model_mod
from . import quadrature
from .errors import NumericFailure, PreconditionError
from .htransform import TransformPair, build_two_end_weight
from .isoperimetry import (IsoProfile, asymptotic_profile, monotone_envelope,
                           profile_halfline)
from .model import WeightedModel
from .profiles import HALF_LINE, two_end_profile
from .solver import DIRICHLET, NEUMANN, GridSpec, _System, kernel_diag

# exp underflow guard for volumes v = e^u
_LOG_FLOOR = -700.0


class _RangeError(NumericFailure):
    """Faber-Krahn function undefined at a requested volume (table too short)."""


@dataclass(frozen=True)
class FaberKrahnFunction:
    """Positive function Lambda(v) on (0, inf) with its shape flags.

    ``integrable_at_zero`` states that integral_0^1 dv / (v Lambda(v))
    converges; ``tail_at_one`` caches that integral (inf when divergent).
    """

    Lambda: object
    nonincreasing: bool
    integrable_at_zero: bool
    tail_at_one: float = math.nan

    def __call__(self, v):
        return self.Lambda(v)


def _zero_tail(lam) -> float:
    """integral_0^1 dv / (v Lambda(v)), via v = e^{-w} on w in [0, inf)."""

    def f(w: float) -> float:
        v = math.exp(max(-w, _LOG_FLOOR))
        try:
            val = float(lam(v))
        except ValueError as exc:
            raise _RangeError(f"Faber-Krahn function undefined at v={v!r}: {exc}") from exc
        if not val > 0:
            raise NumericFailure("Faber-Krahn function must be positive")
        return 1.0 / val

    return quadrature.tail_integral(f, 0.0)


def fk_from_iso(iso: IsoProfile) -> FaberKrahnFunction:
    """Lambda(v) = (J(v) / 2v)^2 from an isoperimetric profile.

    Requires the profile's J(v)/v nonincreasing flag, which makes Lambda
    nonincreasing; integrability at zero is probed numerically.
    """
    if not iso.j_over_v_nonincreasing:
        raise PreconditionError(
            "fk_from_iso needs J(v)/v nonincreasing (profile flag unset)")

    def Lambda(v):
        v_arr = np.asarray(v, dtype=float)
        return 0.25 * (iso.value(v_arr) / v_arr) ** 2

    tail = _zero_tail(Lambda)
    return FaberKrahnFunction(Lambda=Lambda, nonincreasing=True,
                              integrable_at_zero=bool(np.isfinite(tail)),
                              tail_at_one=float(tail))


def fk_connected_sum(parts, c: float = 1.0, Q: float = 2.0) -> FaberKrahnFunction:
    """Glued Faber-Krahn function Lambda(v) = c * min_i Lambda_i(Q v).

    Models a manifold assembled from ends with individual Faber-Krahn
    functions; flags are the conjunction of the parts' flags.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("fk_connected_sum needs at least one part")
    if not c > 0:
        raise ValueError(f"gluing constant c must be positive, got {c}")
    if not Q > 1:
        raise ValueError(f"volume inflation Q must exceed 1, got {Q}")
    fns = [p.Lambda for p in parts]

    def Lambda(v):
        vq = np.asarray(v, dtype=float) * Q
        vals = [np.asarray(f(vq), dtype=float) for f in fns]
        return c * np.minimum.reduce(vals)

    nonincr = all(p.nonincreasing for p in parts)
    integrable = all(p.integrable_at_zero for p in parts)
    tail = _zero_tail(Lambda) if integrable else math.inf
    return FaberKrahnFunction(Lambda=Lambda, nonincreasing=nonincr,
                              integrable_at_zero=integrable,
                              tail_at_one=float(tail))


def hypothesis_fk(alpha: float, n: int = 2, c: float = 1.0) -> FaberKrahnFunction:
    """Two-branch Faber-Krahn form of a subexponential-area end.

    Lambda(v) = c (log v)^(-2(1-alpha)/alpha) for v >= 2 and c v^(-2/n)
    below: the large-volume branch carries the log-type spectral decay of
    an end with area growth exp(r^alpha), the small-volume branch the
    euclidean scaling of dimension n.  Being closed-form, the function is
    defined at every volume, so gamma inversion never runs off a data
    table.  The upward jump at v = 2 makes it non-monotone, which the
    inversion tolerates (only integrability at zero matters there).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if n < 2:
        raise ValueError(f"dimension n must be at least 2, got {n}")
    if not c > 0:
        raise ValueError(f"scale c must be positive, got {c}")
    expo = 2.0 * (1.0 - alpha) / alpha

    def Lambda(v):
        v_arr = np.asarray(v, dtype=float)
        big = np.log(np.maximum(v_arr, 2.0)) ** -expo
        small = np.maximum(v_arr, 1e-300) ** (-2.0 / n)
        return c * np.where(v_arr >= 2.0, big, small)

    return FaberKrahnFunction(Lambda=Lambda, nonincreasing=False,
                              integrable_at_zero=True,
                              tail_at_one=float(_zero_tail(Lambda)))


class _GammaMap:
    """Monotone map u = log(gamma) -> Gamma(e^u) with incremental caching.

    Gamma(g) = integral_0^g dv / (v Lambda(v)); in log volume the integrand
    is 1 / Lambda(e^u), smooth wherever Lambda is.
    """

    def __init__(self, fk: FaberKrahnFunction):
        if not fk.integrable_at_zero:
            raise PreconditionError(
                "gamma inversion needs integral_0 dv/(v Lambda) finite "
                "(integrable_at_zero flag unset)")
        tail = fk.tail_at_one
        if not np.isfinite(tail):
            tail = _zero_tail(fk.Lambda)
        if not np.isfinite(tail):
            raise NumericFailure(
                "integral of 1/(v Lambda) near zero did not converge")
        self._lam = fk.Lambda
        self._us = [0.0]
        self._vals = {0.0: float(tail)}

    def _integrand(self, u: float) -> float:
        v = math.exp(max(u, _LOG_FLOOR))
        try:
            val = float(self._lam(v))
        except ValueError as exc:
            raise _RangeError(
                f"Faber-Krahn function undefined at v=exp({u:.3g}): {exc}"
            ) from exc
        if not val > 0:
            raise NumericFailure("Faber-Krahn function must be positive")
        return 1.0 / val

    def value(self, u: float) -> float:
        if u in self._vals:
            return self._vals[u]
        pos = bisect_left(self._us, u)
        neighbors = [x for x in self._us[max(0, pos - 1):pos + 1]]
        base = min(neighbors, key=lambda x: abs(x - u))
        lo, hi = (base, u) if base <= u else (u, base)
        inc = quadrature.adaptive_simpson(self._integrand, lo, hi)
        val = self._vals[base] + (inc if base <= u else -inc)
        insort(self._us, u)
        self._vals[u] = val
        return val

    def solve(self, t: float) -> float:
        """u with Gamma(e^u) = t, bisected to 1e-10 in u (= relative gamma)."""
        u_hi, step = 0.0, 1.0
        for _ in range(80):
            if self.value(u_hi) >= t:
                break
            u_hi += step
            step *= 2.0
        else:
            raise NumericFailure("gamma bracket failed to reach the target time")
        u_lo, step = u_hi, 1.0
        for _ in range(80):
            if self.value(u_lo) < t:
                break
            u_lo -= step
            step *= 2.0
        else:
            raise NumericFailure("gamma bracket failed below the target time")
        for _ in range(200):
            if u_hi - u_lo <= 1e-10 * max(1.0, abs(u_hi)):
                break
            mid = 0.5 * (u_lo + u_hi)
            if self.value(mid) >= t:
                u_hi = mid
            else:
                u_lo = mid
        return 0.5 * (u_lo + u_hi)


def log_gamma_inverse(fk: FaberKrahnFunction, t: float) -> float:
    """log of gamma(t), the volume solving t = integral_0^gamma dv/(v Lambda)."""
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    return _GammaMap(fk).solve(float(t))


def gamma_inverse(fk: FaberKrahnFunction, t: float) -> float:
    """gamma(t) itself; strictly increasing in t."""
    return math.exp(log_gamma_inverse(fk, t))


def heat_upper_bound(fk: FaberKrahnFunction, t: float) -> float:
    """On-diagonal upper bound 4 / gamma(t/2); strictly decreasing in t."""
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    return 4.0 * math.exp(-log_gamma_inverse(fk, 0.5 * t))


# ---------------------------------------------------------------------------
# smallest eigenvalues


def _smallest_eig(model: WeightedModel, r_start: float, R: float,
                  nodes: int, left_bc: str) -> float:
    """Bottom eigenvalue of -(1/S~)(S~ u')' on (r_start, R), Dirichlet at R.

    The conservative tridiagonal operator is symmetrized by the cell masses
    (exactly, because cm_i upper_i = cm_{i+1} lower_{i+1}) and the smallest
    eigenvalue extracted by Sturm-sequence bisection (LAPACK stebz).
    """
    r = np.linspace(r_start, R, nodes)
    system = _System(model, r, left_bc, DIRICHLET)
    a = 1 if left_bc == DIRICHLET else 0
    b = nodes - 1
    d = -system.diag[a:b]
    flux = system.area_mid / system.h
    cm = system.cell_mass
    e = flux[a:b - 1] / np.sqrt(cm[a:b - 1] * cm[a + 1:b])
    try:
        vals = eigh_tridiagonal(d, e, eigvals_only=True, select="i",
                                select_range=(0, 0), lapack_driver="stebz")
    except Exception as exc:
        raise NumericFailure(f"tridiagonal eigensolve failed: {exc}") from exc
    lam = float(vals[0])
    if not np.isfinite(lam):
        raise NumericFailure("eigensolve returned a non-finite value")
    return lam


def lambda1_dirichlet(model: WeightedModel, R: float, left_bc: str = NEUMANN,
                      r_start: float = 0.0, nodes: int = 513) -> float:
    """Smallest eigenvalue of the radial operator on (r_start, R).

    The outer boundary is always Dirichlet; ``left_bc`` picks the inner
    condition (neumann for the ball around a pole, dirichlet for an
    interval).  Richardson-extrapolated over the grid and its refinement.
    """
    if left_bc not in (NEUMANN, DIRICHLET):
        raise ValueError(f"bad boundary condition {left_bc!r}")
    if nodes < 512:
        raise PreconditionError(f"need at least 512 nodes, got {nodes}")
    if not (model.r_lo <= r_start < R <= model.r_hi):
        raise ValueError(f"interval ({r_start}, {R}) outside the model domain")
    coarse = _smallest_eig(model, r_start, R, nodes, left_bc)
    fine = _smallest_eig(model, r_start, R, 2 * nodes - 1, left_bc)
    if not (coarse > 0 and fine > 0):
        raise NumericFailure("eigensolve returned a non-positive bottom eigenvalue")
    if abs(fine - coarse) > 0.25 * fine:
        raise NumericFailure(
            f"eigenvalue not converged: {coarse:.6g} vs {fine:.6g}")
    return fine + (fine - coarse) / 3.0


def lambda1_rayleigh_upper(model: WeightedModel, R: float) -> float:
    """Test-function bound lambda_1(B_R) <= 4 (S~(R) / V~(R))^2."""
    lo = max(model.r_lo, 0.0)
    if not lo < R <= model.r_hi:
        raise ValueError(f"R={R} outside ({lo}, {model.r_hi}]")
    log_area = float(model.log_area_weighted(np.asarray(float(R))))
    log_vol = model_mod.log_volume(model, float(R))
    return 4.0 * math.exp(2.0 * (log_area - log_vol))


def lambda1_lower_locally_harnack(c: float, rho: float, V0: float,
                                  n: float, muU: float) -> float:
    """(c / rho^2) min((V0/mu(U))^2, (V0/mu(U))^(2/n)) for precompact U.

    Pointwise evaluator; the constant c comes from the caller (it depends
    on local doubling and Poincare data that are out of scope here).
    """
    for name, val in ("c", c), ("rho", rho), ("V0", V0), ("n", n), ("muU", muU):
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")
    ratio = V0 / muU
    return (c / rho ** 2) * min(ratio ** 2, ratio ** (2.0 / n))


def log_lower_bound(N: float, c_x: float, t: float) -> float:
    """Polynomial-log floor c_x / (t log t)^(N/2), valid for t > e.

    N is the volume-growth order; in the locally-Harnack setting it arises
    as 2 max(N0 + theta, (N0 + theta)/n) from the growth exponent N0, the
    Harnack sphere exponent theta, and the dimension n.
    """
    if not N > 0 or not c_x > 0:
        raise ValueError("N and c_x must be positive")
    if not t > math.e:
        raise ValueError(f"t must exceed e, got {t}")
    return c_x / (t * math.log(t)) ** (N / 2.0)


# ---------------------------------------------------------------------------
# on-diagonal lower bound


def _detect_alpha(model: WeightedModel):
    profile = getattr(model.profile, "plus", model.profile)
    return getattr(profile, "alpha", None)


def heat_lower_bound(model: WeightedModel, t: float, alpha: float | None = None,
                     eigensolver: bool = False, r_count: int = 49,
                     r_span: tuple[float, float] = (1.0 / 32.0, 8.0),
                     r_cap: float | None = None) -> float:
    """max_R (1 / V~(R)) exp(-lambda_1(B_R) t) over a log grid of R.

    The grid is seeded at R = t^(1/(2-alpha)) when the (plus-end) profile
    carries an alpha, else at sqrt(t).  By default lambda_1 is replaced by
    its Rayleigh upper bound, which keeps the result a true lower bound
    without an eigensolve per radius; ``eigensolver=True`` switches to the
    bisection eigensolve for a tighter (slower) bound.
    """
    if not t > 0:
        raise ValueError(f"time must be positive, got {t}")
    if alpha is None:
        alpha = _detect_alpha(model)
    seed = t ** (1.0 / (2.0 - alpha)) if alpha is not None else math.sqrt(t)
    lo = max(model.r_lo, 0.0)
    r_floor = lo + 0.5
    r_hi = min(seed * r_span[1], 0.999 * model.r_hi)
    if r_cap is not None:
        r_hi = min(r_hi, r_cap)
    r_lo_grid = max(seed * r_span[0], r_floor)
    if not r_hi > r_lo_grid:
        r_hi = r_lo_grid * 1.5
    radii = np.geomspace(r_lo_grid, r_hi, r_count)
    nodes = np.concatenate(([lo], radii))
    log_vol = quadrature.cumulative_log_integral(
        model.log_area_weighted, nodes,
        max_step=max((r_hi - lo) / 4096.0, 1e-6))[1:]
    if eigensolver:
        left = NEUMANN if model.domain == HALF_LINE else DIRICHLET
        lam = np.array([
            lambda1_dirichlet(model, float(R), left_bc=left, r_start=lo)
            for R in radii])
    else:
        log_area = model.log_area_weighted(radii)
        lam = 4.0 * np.exp(2.0 * (log_area - log_vol))
    log_val = -log_vol - lam * t
    with np.errstate(under="ignore"):
        return float(np.exp(np.max(log_val)))


# ---------------------------------------------------------------------------
# decay-exponent extraction

# trailing fit windows, in decades of t; the read is their mean, which
# damps the collinearity of slowly varying prefactors with t^beta over
# any single short window
_RUNG_SPANS = (0.5, 0.65, 0.8, 1.0)
_SELECT_SPAN = 1.5
# below this exponent an offset power (t + tau)^beta is numerically affine
# in log t over a short window, so such fits are treated as disguised
# logarithms rather than genuine power readings
_MIMIC_FLOOR = 0.105


@dataclass(frozen=True)
class ExponentFit:
    """Decay exponent of a series value ~ P(t) exp(-c t^beta).

    ``beta`` averages four trailing-window fits of the selected prefactor
    family; ``family`` records which structure won model selection
    ("log-prefactor" fits -log(value) = a + m log t + c t^beta, profiling
    out polynomial prefactors, "offset-power" fits a + c (t + tau)^beta,
    absorbing a time origin shift); ``rungs`` keeps the per-window reads
    and ``residual`` the mean squared misfit per point across them.
    ``polynomial`` flags series whose -log(value) grows slower than any
    t^0.05.
    """

    beta: float
    family: str
    polynomial: bool
    rungs: tuple
    residual: float


def _profiled_power_fit(t, w, design, beta_lo):
    """Least-squares fit of w over design(beta), beta on a refined log grid."""
    grid = np.geomspace(beta_lo, 2.0, 60)

    def solve(beta: float):
        dm = design(beta)
        coef, *_ = np.linalg.lstsq(dm, w, rcond=None)
        res = w - dm @ coef
        return float(res @ res), coef

    errs = [solve(b)[0] for b in grid]
    k = int(np.argmin(errs))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    opt = minimize_scalar(lambda b: solve(b)[0], bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-10})
    beta = float(opt.x)
    err, coef = solve(beta)
    if err > errs[k]:
        beta, (err, coef) = float(grid[k]), solve(float(grid[k]))
    return err, beta, coef


def _fit_log_family(t, w):
    one, lt = np.ones_like(t), np.log(t)
    return _profiled_power_fit(
        t, w, lambda b: np.column_stack([one, lt, t ** b]), 0.05)


def _fit_offset_family(t, w):
    one, t0 = np.ones_like(t), float(t[0])
    taus = np.concatenate((-t0 * np.geomspace(0.02, 0.9, 10)[::-1], [0.0],
                           t0 * np.geomspace(0.05, 30.0, 14)))
    best = None
    for tau in taus:
        out = _profiled_power_fit(
            t, w, lambda b, tau=tau: np.column_stack([one, (t + tau) ** b]),
            _MIMIC_FLOOR - 0.005)
        if best is None or out[0] < best[0]:
            best = out
    return best


def fit_decay_exponent(times, values) -> ExponentFit:
    """Extract beta from a decaying series value ~ P(t) exp(-c t^beta).

    Both prefactor families are fitted on four trailing windows (half to
    one decade); the family whose per-window exponents agree best wins,
    after two structural vetoes: a log-prefactor fit whose power term
    carries a nonpositive coefficient is contorted, and an offset-power
    fit pinned at the smallest admissible exponent is imitating a
    logarithm.  The reported exponent is the mean of the winner's window
    reads.  A power term contributing nothing over the whole series, or a
    read at the 0.05 floor, flags polynomial decay.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != y.shape or t.size < 12:
        raise ValueError("need matching 1-d series of at least 12 points")
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("times must be positive and increasing")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("values must be positive and finite")
    if np.any(np.diff(y) >= 0):
        raise ValueError("values must be strictly decreasing")
    if t[-1] / t[0] < 10.0 ** _SELECT_SPAN * (1.0 - 1e-9):
        raise PreconditionError(
            "need at least 1.5 decades of time for a stable exponent fit")
    w = -np.log(y)

    rungs_log, rungs_off = [], []
    err_log = err_off = 0.0
    for span in _RUNG_SPANS:
        m = t >= t[-1] / 10.0 ** span * (1.0 - 1e-12)
        if int(m.sum()) < 4:
            raise ValueError(
                "series too sparse: trailing half decade has fewer than "
                "4 points")
        e, b, _ = _fit_log_family(t[m], w[m])
        rungs_log.append(b)
        err_log += e / m.sum()
        e, b, _ = _fit_offset_family(t[m], w[m])
        rungs_off.append(b)
        err_off += e / m.sum()

    sel = t >= t[-1] / 10.0 ** _SELECT_SPAN * (1.0 - 1e-12)
    _, _, coef_sel = _fit_log_family(t[sel], w[sel])

    def spread(rungs):
        mid = float(np.median(rungs))
        return (max(rungs) - min(rungs)) / max(abs(mid), 1e-300)

    if coef_sel[2] <= 0.0:
        family = "offset-power"
    elif min(rungs_off) <= _MIMIC_FLOOR:
        family = "log-prefactor"
    elif spread(rungs_off) < spread(rungs_log):
        family = "offset-power"
    else:
        family = "log-prefactor"
    rungs = rungs_off if family == "offset-power" else rungs_log
    err = err_off if family == "offset-power" else err_log
    beta = float(np.mean(rungs))

    _, beta_full, coef_full = _fit_log_family(t, w)
    power = coef_full[2] * t ** beta_full
    contrib = abs(float(power[-1] - power[0]))
    span_w = max(abs(float(w[-1] - w[0])), 1e-300)
    polynomial = contrib <= 1e-9 * span_w or beta <= 0.0505
    return ExponentFit(beta=beta, family=family, polynomial=polynomial,
                       rungs=tuple(float(b) for b in rungs),
                       residual=err / len(_RUNG_SPANS))


# ---------------------------------------------------------------------------
# the two-end pipeline


@dataclass(frozen=True)
class BoundsReport:
    """Theoretical envelope and solver diagonal on a shared time grid.

    All three columns carry the same factor h^2(x_ref), so the ordering
    lower <= numeric <= upper and every fitted exponent are unaffected by
    the reference point.  ``details`` records calibration constants and
    run parameters.
    """

    times: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    numeric: np.ndarray
    fitted_exponent: float
    details: dict = field(default_factory=dict)


@contextmanager
def _stage(name: str):
    try:
        yield
    except (PreconditionError, NumericFailure, ValueError) as exc:
        raise type(exc)(f"pipeline stage '{name}': {exc}") from exc


def _source_indices(r: np.ndarray, lo: float, hi: float,
                    count: int) -> np.ndarray:
    # mirrored source fan: the sup-diagonal maximizer drifts outward like
    # log t, and which side hosts it depends on the end geometry, so both
    # ends are probed at the same geometric spacing
    half = max(1, (count - 1) // 2)
    pos = np.geomspace(0.3, 0.85 * hi, half)
    neg = (-np.geomspace(0.3, 0.85 * abs(lo), half)[::-1]
           if lo < -0.4 else np.empty(0))
    radii = np.concatenate((neg, [0.0], pos))
    idx = np.unique(np.argmin(np.abs(r[:, None] - radii[None, :]), axis=0))
    return idx[(idx > 0) & (idx < r.size - 1)]


def two_end_pipeline(alpha: float, n: int = 2, minus_profile=None, times=None,
                     *, x_ref: float = 0.0, dt: float = 0.01,
                     dt_growth: float = 1.05, dt_cap: float | None = None,
                     nodes: int = 4097, r_min: float | None = None,
                     r_max: float | None = None,
                     gluing: tuple[float, float] = (1.0, 2.0),
                     n_sources: int = 97) -> BoundsReport:
    """Full bound chain for the two-end model with an exp_alpha plus end.

    Builds the harmonic two-end weight, reads the transformed plus-end and
    the minus-end isoperimetric profiles, glues their Faber-Krahn functions,
    and calibrates the closed two-branch hypothesis form against the glued
    function once, at small volumes, freezing its scale.  The report holds
    the gamma-inversion upper bound of the calibrated form, the ball-trace
    lower bound, and the solver's sup-diagonal, all scaled by h^2(x_ref)
    through the kernel identity q_t(x, x) = h^2(x) q~_t(x, x).  The upper
    bound's free level is anchored at the first reported time, and the
    numeric decay exponent is fitted from the sup-diagonal series.
    """
    if times is None:
        times = np.geomspace(10.0, 1000.0, 61)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(times <= 0) \
            or np.any(np.diff(times) <= 0):
        raise ValueError("times must be increasing and positive")
    t_max = float(times[-1])
    theo = alpha / (2.0 - alpha)

    base = WeightedModel(two_end_profile(alpha, n, minus=minus_profile))

    # volume reach: log gamma(t/2) ~ ((2-alpha) t / 8 alpha)^theo up to the
    # profile constant, padded here; the weight table must extend to the
    # radius realizing that volume (log S~ ~ r^alpha) and, when possible,
    # to the lower-bound radius grid, but 1/S = exp(r^alpha) must not
    # overflow, so the table radius is capped
    u_need = float(np.clip(
        2.2 * ((2.0 - alpha) / (8.0 * alpha) * t_max) ** theo + 8.0,
        12.0, 600.0))
    r_table = float(np.clip(
        max(1.3 * u_need ** (1.0 / alpha),
            8.5 * t_max ** (1.0 / (2.0 - alpha))),
        400.0, min(30000.0, 680.0 ** (1.0 / alpha))))
    with _stage("harmonic weight"):
        pair = build_two_end_weight(base, r_max=r_table)
    trans = pair.transformed
    v_max = math.exp(min(u_need, 600.0))
    with _stage("isoperimetric profile"):
        j_plus = profile_halfline(trans, r_start=2.0, v_max=v_max)
        j_minus = profile_halfline(WeightedModel(base.profile.minus),
                                   v_max=v_max)
        # the transformed area can wiggle by a few percent at moderate
        # radii (cross terms of h^2 S); pass to the largest monotone
        # minorant, which is still a lower isoperimetric function
        if not j_plus.j_over_v_nonincreasing:
            j_plus = monotone_envelope(j_plus)
        if not j_minus.j_over_v_nonincreasing:
            j_minus = monotone_envelope(j_minus)
    with _stage("Faber-Krahn"):
        fk_plus = fk_from_iso(j_plus)
        fk_minus = fk_from_iso(j_minus)
    with _stage("minus-end Faber-Krahn hypothesis"):
        floor = fk_from_iso(asymptotic_profile(alpha, n))
        v_probe = np.geomspace(1e2, min(1e8, math.exp(
            0.8 * min(j_minus.log_v_max, j_plus.log_v_max))), 24)
        ratio = fk_minus(v_probe) / floor(v_probe)
        if float(np.min(ratio)) < 1e-2:
            raise PreconditionError(
                "minus-end Faber-Krahn function falls below the log-type "
                "floor of the plus end; the glued bound would lose the "
                "claimed decay")
    fk_glued = fk_connected_sum([fk_plus, fk_minus], c=gluing[0], Q=gluing[1])
    with _stage("hypothesis calibration"):
        # the profiled tables only reach moderate volumes, far short of
        # gamma's late-time range; the closed two-branch form extends them,
        # with its scale frozen at the largest constant keeping it below
        # the glued profile-backed function on the probed window
        shape = hypothesis_fk(alpha, n, 1.0)
        v_cal = np.geomspace(2.0, math.exp(0.8 * j_plus.log_v_max), 200)
        c_cal = float(np.min(fk_glued(v_cal) / shape(v_cal)))
        if not (np.isfinite(c_cal) and c_cal > 0):
            raise NumericFailure(
                "calibration of the hypothesis form degenerated")
        fk = hypothesis_fk(alpha, n, c_cal)
    h2_ref = float(pair.weight.value(x_ref)) ** 2

    with _stage("gamma inversion"):
        upper_raw = np.array([heat_upper_bound(fk, t) for t in times])
    with _stage("lower bound"):
        lower = h2_ref * np.array(
            [heat_lower_bound(trans, t, alpha=alpha, r_cap=0.98 * r_table)
             for t in times])

    with _stage("kernel solve"):
        if r_max is None:
            r_max = max(60.0, min(1.8 * t_max ** (1.0 / (2.0 - alpha)), 180.0))
        if r_min is None:
            # the solver domain must be symmetric-deep: a shallow wall on
            # either end floors that end's spectrum and visibly accelerates
            # the late-time sup-diagonal decay
            r_min = -r_max
        if dt_cap is None:
            dt_cap = 0.25
        # Crank-Nicolson damps grid-frequency modes at rate ~ h^2/dt^2 per
        # unit time; when the signal itself decays exponentially (drift
        # alpha r^(alpha-1) -> const as alpha -> 1) the step must stay small
        # enough that roundoff noise decays faster than the signal
        h_grid = (r_max - r_min) / (nodes - 1)
        r_typ = max(1.0, t_max ** (1.0 / (2.0 - alpha)))
        rho_est = 0.25 * (alpha * r_typ ** (alpha - 1.0)) ** 2
        if rho_est > 0.0:
            dt_cap = min(dt_cap, 0.85 * h_grid / math.sqrt(2.0 * rho_est))
        grid = GridSpec(r_min, r_max, nodes, dt, dt_growth=dt_growth,
                        dt_cap=dt_cap)
        r = grid.node_positions()
        idx = _source_indices(r, r_min, r_max, n_sources)
        kern = kernel_diag(trans, grid, DIRICHLET, times, idx, allow_leak=True)
        numeric_raw = np.max(kern.diag, axis=1)
        if np.any(numeric_raw <= 0):
            raise NumericFailure(
                "kernel diagonal vanished at a reported time; refine the grid")
    numeric = h2_ref * numeric_raw

    calib = max(1.0, float(numeric_raw[0] / upper_raw[0]))
    upper = h2_ref * calib * upper_raw

    with _stage("exponent fit"):
        fit_num = fit_decay_exponent(times, numeric)
        fit_up = fit_decay_exponent(times, upper)

    details = {
        "alpha": float(alpha), "n": int(n),
        "theoretical_exponent": theo,
        "fitted_exponent_upper": fit_up.beta,
        "fit_family": fit_num.family,
        "fit_family_upper": fit_up.family,
        "kappa1": pair.kappa1, "minus_tail": pair.minus_tail,
        "x_ref": float(x_ref), "h2_ref": h2_ref,
        "fk_calibration": c_cal,
        "upper_calibration": calib, "anchor_time": float(times[0]),
        "gluing_c": float(gluing[0]), "gluing_Q": float(gluing[1]),
        "grid_nodes": int(nodes), "r_min": float(r_min),
        "r_max": float(r_max), "dt_cap": float(dt_cap),
        "r_table": float(r_table),
        "clamp_count": int(kern.clamp_count),
        "symmetry_error": float(kern.symmetry_error),
    }
    return BoundsReport(times=times, upper=upper, lower=lower,
                        numeric=numeric, fitted_exponent=fit_num.beta,
                        details=details)


def eigenvalue_table(model: WeightedModel, radii, left_bc: str = NEUMANN,
                     r_start: float = 0.0, nodes: int = 513) -> np.ndarray:
    """Rows (R, lambda1, rayleigh_upper) for a list of ball radii."""
    rows = []
    for R in np.asarray(radii, dtype=float):
        rows.append((float(R),
                     lambda1_dirichlet(model, float(R), left_bc=left_bc,
                                       r_start=r_start, nodes=nodes),
                     lambda1_rayleigh_upper(model, float(R))))
    return np.array(rows)
