"""Radial warping profiles for rotationally symmetric models.

A profile describes the metric ds^2 = dr^2 + psi(r)^2 dtheta^2 through the
warping function psi and the derived area function S(r) = psi(r)^(n-1); the
sphere measure is normalized to 1, so S is the full boundary area of the
geodesic sphere at radius r.  Everything is exposed in log space first
(log_psi, log_area and their r-derivatives) because several consumers need
areas far beyond the floating-point range.

Families with a pole (euclidean, power with beta > 0, hyperbolic, rlogr)
satisfy psi(0) = 0.  Boundary-type families (exp_alpha, power with beta = 0,
table) have psi(0) > 0; exp_alpha optionally holds psi constant on
[0, cap_radius] via a C1 cubic blend in log space, since only the r >= 1
behavior of the family is prescribed.  Full-line profiles join a plus-side
profile to a minus-side profile with the same blend across
[-cap_radius, cap_radius].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedError

HALF_LINE = "half_line"
FULL_LINE = "full_line"


@dataclass(frozen=True)
class _Hermite:
    """Cubic y(r) on [a, b] with prescribed endpoint values and slopes."""

    a: float
    b: float
    ya: float
    yb: float
    da: float
    db: float

    def _coeffs(self):
        h = self.b - self.a
        c0 = self.ya
        c1 = self.da
        c2 = (3.0 * (self.yb - self.ya) / h - 2.0 * self.da - self.db) / h
        c3 = (self.da + self.db - 2.0 * (self.yb - self.ya) / h) / h**2
        return c0, c1, c2, c3

    def value(self, r):
        c0, c1, c2, c3 = self._coeffs()
        x = r - self.a
        return c0 + x * (c1 + x * (c2 + x * c3))

    def deriv(self, r):
        c0, c1, c2, c3 = self._coeffs()
        x = r - self.a
        return c1 + x * (2.0 * c2 + 3.0 * x * c3)

    def deriv2(self, r):
        c0, c1, c2, c3 = self._coeffs()
        x = r - self.a
        return 2.0 * c2 + 6.0 * x * c3


class RadialProfile:
    """Base class; subclasses implement log_psi and its two derivatives."""

    family: str = "base"
    domain: str = HALF_LINE
    n: int = 2
    cap_radius: float = 0.0
    pole: bool = False
    # Evaluation range in r; r_hi may be +inf, r_lo is 0 for half-line
    # families and -inf for full-line joins.
    r_lo: float = 0.0
    r_hi: float = np.inf

    def _check_range(self, r: np.ndarray) -> None:
        if np.any(r < self.r_lo - 1e-12) or np.any(r > self.r_hi + 1e-12):
            raise ValueError(
                f"radius outside profile domain [{self.r_lo}, {self.r_hi}]"
            )

    def log_psi(self, r):
        raise NotImplementedError

    def dlog_psi(self, r):
        raise NotImplementedError

    def d2log_psi(self, r):
        raise NotImplementedError

    # Area S = psi^(n-1) and log/derivative forms.
    def log_area(self, r):
        return (self.n - 1) * self.log_psi(r)

    def dlog_area(self, r):
        return (self.n - 1) * self.dlog_psi(r)

    def d2log_area(self, r):
        return (self.n - 1) * self.d2log_psi(r)

    def psi(self, r):
        return np.exp(self.log_psi(r))

    def area(self, r):
        return np.exp(self.log_area(r))

    def d_area(self, r):
        return self.area(r) * self.dlog_area(r)

    def d2_area(self, r):
        # S'' = S * ((log S)'' + ((log S)')^2)
        return self.area(r) * (self.d2log_area(r) + self.dlog_area(r) ** 2)

    def params(self) -> dict:
        return {}

    def __repr__(self) -> str:
        kv = " ".join(f"{k}={v}" for k, v in self.params().items())
        return f"<{self.family} {kv}>".replace(" >", ">")


def _as_array(r):
    return np.asarray(r, dtype=float)


class _CappedProfile(RadialProfile):
    """Half-line profile whose formula is replaced on [0, cap_radius] by a
    near-constant C1 blend in log psi (zero slope at r = 0)."""

    def __init__(self, cap_radius: float):
        if cap_radius < 0:
            raise ValueError("cap_radius must be >= 0")
        self.cap_radius = float(cap_radius)

    def _formula_log_psi(self, r):
        raise NotImplementedError

    def _formula_dlog_psi(self, r):
        raise NotImplementedError

    def _formula_d2log_psi(self, r):
        raise NotImplementedError

    def _cap_poly(self, r, order: int):
        # p(r) = v + d*r^2*(r-a)/a^2 has p(0)=p(a)=v, p'(0)=0, p'(a)=d.
        a = self.cap_radius
        v = self._formula_log_psi(np.array(a))
        d = self._formula_dlog_psi(np.array(a))
        if order == 0:
            return v + d * r * r * (r - a) / a**2
        if order == 1:
            return d * (3.0 * r * r - 2.0 * a * r) / a**2
        return d * (6.0 * r - 2.0 * a) / a**2

    def _piecewise(self, r, order: int):
        r = _as_array(r)
        self._check_range(r)
        if self.cap_radius == 0.0:
            formula = [self._formula_log_psi, self._formula_dlog_psi,
                       self._formula_d2log_psi][order]
            return formula(r)
        inside = r < self.cap_radius
        safe = np.where(inside, self.cap_radius, r)
        formula = [self._formula_log_psi, self._formula_dlog_psi,
                   self._formula_d2log_psi][order]
        out = formula(safe)
        if np.any(inside):
            out = np.where(inside, self._cap_poly(r, order), out)
        return out

    def log_psi(self, r):
        return self._piecewise(r, 0)

    def dlog_psi(self, r):
        return self._piecewise(r, 1)

    def d2log_psi(self, r):
        return self._piecewise(r, 2)


class ExpAlphaProfile(_CappedProfile):
    """psi(r) = exp(-r^alpha / (n-1)), so S(r) = exp(-r^alpha)."""

    family = "exp_alpha"

    def __init__(self, alpha: float, n: int = 2, cap_radius: float = 0.0):
        super().__init__(cap_radius)
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        if n < 2:
            raise ValueError("dimension n must be >= 2")
        self.alpha = float(alpha)
        self.n = int(n)

    def _formula_log_psi(self, r):
        return -np.power(r, self.alpha) / (self.n - 1)

    def _formula_dlog_psi(self, r):
        a = self.alpha
        with np.errstate(divide="ignore"):
            return -a * np.power(r, a - 1.0) / (self.n - 1)

    def _formula_d2log_psi(self, r):
        a = self.alpha
        if a == 1.0:
            return np.zeros_like(_as_array(r))
        with np.errstate(divide="ignore"):
            return -a * (a - 1.0) * np.power(r, a - 2.0) / (self.n - 1)

    def params(self):
        return {"alpha": self.alpha, "n": self.n, "cap_radius": self.cap_radius}


class PowerProfile(RadialProfile):
    """psi(r) = r^beta; beta = 1 is the euclidean model."""

    family = "power"

    def __init__(self, beta: float, n: int = 2):
        if beta < 0:
            raise ValueError("beta must be >= 0")
        if n < 2:
            raise ValueError("dimension n must be >= 2")
        self.beta = float(beta)
        self.n = int(n)
        self.pole = beta > 0

    def log_psi(self, r):
        r = _as_array(r)
        self._check_range(r)
        if self.beta == 0.0:
            return np.zeros_like(r)
        with np.errstate(divide="ignore"):
            return self.beta * np.log(r)

    def dlog_psi(self, r):
        r = _as_array(r)
        with np.errstate(divide="ignore"):
            return self.beta / r if self.beta != 0.0 else np.zeros_like(r)

    def d2log_psi(self, r):
        r = _as_array(r)
        with np.errstate(divide="ignore"):
            return -self.beta / r**2 if self.beta != 0.0 else np.zeros_like(r)

    def params(self):
        return {"beta": self.beta, "n": self.n}


class EuclideanProfile(PowerProfile):
    family = "euclidean"

    def __init__(self, n: int = 2):
        super().__init__(beta=1.0, n=n)

    def params(self):
        return {"n": self.n}


class HyperbolicProfile(RadialProfile):
    """psi(r) = sinh(r); constant curvature -1 space form."""

    family = "hyperbolic"
    pole = True

    def __init__(self, n: int = 2):
        if n < 2:
            raise ValueError("dimension n must be >= 2")
        self.n = int(n)

    def log_psi(self, r):
        r = _as_array(r)
        self._check_range(r)
        # log sinh r = r + log(1 - exp(-2r)) - log 2, stable for large r.
        with np.errstate(divide="ignore"):
            return r + np.log1p(-np.exp(-2.0 * r)) - np.log(2.0)

    def dlog_psi(self, r):
        r = _as_array(r)
        with np.errstate(divide="ignore", over="ignore"):
            return 1.0 / np.tanh(r)

    def d2log_psi(self, r):
        r = _as_array(r)
        with np.errstate(divide="ignore", over="ignore"):
            return -1.0 / np.sinh(r) ** 2

    def params(self):
        return {"n": self.n}


class RLogRProfile(RadialProfile):
    """Two-dimensional profile with S(r) = r log r for r >= 2 and S(r) = r
    for r <= 1, joined by a C1 cubic blend in log S."""

    family = "rlogr"
    pole = True
    n = 2

    def __init__(self):
        ya, da = 0.0, 1.0  # log S = log r at r = 1
        yb = np.log(2.0 * np.log(2.0))
        db = 0.5 + 1.0 / (2.0 * np.log(2.0))
        self._blend = _Hermite(1.0, 2.0, ya, yb, da, db)

    def log_psi(self, r):
        r = _as_array(r)
        self._check_range(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            low = np.log(r)
            high = np.log(r) + np.log(np.log(np.maximum(r, 1.5)))
        out = np.where(r <= 1.0, low, np.where(r >= 2.0, high, self._blend.value(r)))
        return out

    def dlog_psi(self, r):
        r = _as_array(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            low = 1.0 / r
            rl = np.maximum(r, 1.5)
            high = 1.0 / r + 1.0 / (rl * np.log(rl))
        return np.where(r <= 1.0, low, np.where(r >= 2.0, high, self._blend.deriv(r)))

    def d2log_psi(self, r):
        r = _as_array(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            low = -1.0 / r**2
            rl = np.maximum(r, 1.5)
            lg = np.log(rl)
            high = -1.0 / r**2 - (lg + 1.0) / (rl * lg) ** 2
        return np.where(r <= 1.0, low, np.where(r >= 2.0, high, self._blend.deriv2(r)))

    def params(self):
        return {}


class TableProfile(RadialProfile):
    """Profile interpolated from (r, psi) samples.

    Interpolation is piecewise-linear in log psi; derivatives come from
    central differences of the log values, which keeps psi positive under
    any refinement of the table.  Queries outside [r_0, r_last] raise.
    """

    family = "table"

    def __init__(self, r: np.ndarray, psi: np.ndarray, n: int = 2):
        r = np.asarray(r, dtype=float)
        psi = np.asarray(psi, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise ValueError("table needs at least 3 sample points")
        if psi.shape != r.shape:
            raise ValueError("r and psi must have matching shapes")
        if np.any(np.diff(r) <= 0):
            raise ValueError("table radii must be strictly increasing")
        if np.any(psi <= 0):
            raise ValueError("table psi values must be positive")
        if r[0] < 0:
            raise ValueError("table radii must be >= 0")
        if n < 2:
            raise ValueError("dimension n must be >= 2")
        self.n = int(n)
        self.r_lo = float(r[0])
        self.r_hi = float(r[-1])
        self._r = r
        self._logpsi = np.log(psi)
        self._dlog = np.gradient(self._logpsi, r)
        self._d2log = np.gradient(self._dlog, r)

    @classmethod
    def from_csv(cls, path: str, n: int = 2) -> "TableProfile":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip().lower() for h in header[:2]] != ["r", "psi"]:
                raise ValueError(f"table csv must have header r,psi, got {header}")
            for line in reader:
                if not line:
                    continue
                rows.append((float(line[0]), float(line[1])))
        if not rows:
            raise ValueError("table csv has no data rows")
        arr = np.array(rows)
        return cls(arr[:, 0], arr[:, 1], n=n)

    def log_psi(self, r):
        r = _as_array(r)
        self._check_range(r)
        return np.interp(r, self._r, self._logpsi)

    def dlog_psi(self, r):
        r = _as_array(r)
        self._check_range(r)
        return np.interp(r, self._r, self._dlog)

    def d2log_psi(self, r):
        r = _as_array(r)
        self._check_range(r)
        return np.interp(r, self._r, self._d2log)

    def params(self):
        return {"points": len(self._r), "n": self.n}


class FullLineProfile(RadialProfile):
    """Join of a plus-side and a minus-side profile across r = 0.

    The minus profile is evaluated at -r; log psi is blended with a C1 cubic
    on [-cap_radius, cap_radius].  Both sides must share the dimension.
    """

    family = "two_end"
    domain = FULL_LINE
    r_lo = -np.inf

    def __init__(self, plus: RadialProfile, minus: RadialProfile,
                 cap_radius: float = 1.0):
        if cap_radius <= 0:
            raise ValueError("full-line joins need cap_radius > 0")
        if plus.n != minus.n:
            raise ValueError("plus and minus profiles must share dimension n")
        if plus.domain != HALF_LINE or minus.domain != HALF_LINE:
            raise ValueError("joined profiles must be half-line profiles")
        self.plus = plus
        self.minus = minus
        self.n = plus.n
        self.cap_radius = float(cap_radius)
        a = self.cap_radius
        self._blend = _Hermite(
            -a,
            a,
            float(minus.log_psi(np.array(a))),
            float(plus.log_psi(np.array(a))),
            float(-minus.dlog_psi(np.array(a))),
            float(plus.dlog_psi(np.array(a))),
        )

    def _piece(self, r, order: int):
        r = _as_array(r)
        a = self.cap_radius
        plus_part = [self.plus.log_psi, self.plus.dlog_psi, self.plus.d2log_psi]
        minus_part = [self.minus.log_psi, self.minus.dlog_psi, self.minus.d2log_psi]
        blend_part = [self._blend.value, self._blend.deriv, self._blend.deriv2]
        sign = (1.0, -1.0, 1.0)[order]
        out = np.where(
            r >= a,
            plus_part[order](np.maximum(r, a)),
            np.where(
                r <= -a,
                sign * minus_part[order](np.maximum(-r, a)),
                blend_part[order](np.clip(r, -a, a)),
            ),
        )
        return out

    def log_psi(self, r):
        return self._piece(r, 0)

    def dlog_psi(self, r):
        return self._piece(r, 1)

    def d2log_psi(self, r):
        return self._piece(r, 2)

    def params(self):
        return {
            "plus": repr(self.plus),
            "minus": repr(self.minus),
            "cap_radius": self.cap_radius,
        }


_FAMILY_KEYS = {
    "exp_alpha": {"alpha", "n", "cap_radius"},
    "euclidean": {"n"},
    "power": {"beta", "n"},
    "hyperbolic": {"n"},
    "rlogr": set(),
    "table": {"path", "n"},
}


def make_profile(family: str, **kwargs) -> RadialProfile:
    """Construct a profile from grammar-level parameters.

    Unknown families or keys raise ValueError naming the offender.
    """
    if family not in _FAMILY_KEYS:
        raise ValueError(
            f"unknown profile family {family!r}; expected one of "
            f"{sorted(_FAMILY_KEYS)}"
        )
    extra = set(kwargs) - _FAMILY_KEYS[family]
    if extra:
        raise ValueError(f"unknown keys {sorted(extra)} for family {family!r}")
    if family == "exp_alpha":
        if "alpha" not in kwargs:
            raise ValueError("exp_alpha requires key alpha")
        return ExpAlphaProfile(
            alpha=float(kwargs["alpha"]),
            n=int(kwargs.get("n", 2)),
            cap_radius=float(kwargs.get("cap_radius", 0.0)),
        )
    if family == "euclidean":
        return EuclideanProfile(n=int(kwargs.get("n", 2)))
    if family == "power":
        if "beta" not in kwargs:
            raise ValueError("power requires key beta")
        return PowerProfile(beta=float(kwargs["beta"]), n=int(kwargs.get("n", 2)))
    if family == "hyperbolic":
        return HyperbolicProfile(n=int(kwargs.get("n", 2)))
    if family == "rlogr":
        return RLogRProfile()
    if "path" not in kwargs:
        raise ValueError("table requires key path")
    return TableProfile.from_csv(kwargs["path"], n=int(kwargs.get("n", 2)))


def two_end_profile(alpha: float, n: int = 2, minus: RadialProfile | None = None,
                    cap_radius: float = 1.0) -> FullLineProfile:
    """Full-line profile: exp_alpha plus end joined to a minus end
    (hyperbolic of the same dimension unless given)."""
    plus = ExpAlphaProfile(alpha=alpha, n=n, cap_radius=0.0)
    if minus is None:
        minus = HyperbolicProfile(n=n)
    if minus.domain != HALF_LINE:
        raise UnsupportedError("minus end must be a half-line profile")
    return FullLineProfile(plus, minus, cap_radius=cap_radius)
