"""Monotone tabulated functions and exact generalized inverses.

A MonotoneTab is a right-continuous monotone function on [0, +inf) given by
breakpoints and values.  Two interpolation modes exist: 'constant' (step
function; the carrier used for generalized inverses) and 'linear'.  Beyond
the last breakpoint the function either holds its last value or drops to
zero; the drop is placed AT the last breakpoint so right-continuity is kept.

The generalized inverse of a nonincreasing phi is
    phi_star(s) = sup { t > 0 : phi(t) > s },  sup of the empty set = 0,
computed exactly: step functions invert to step functions, strictly
decreasing piecewise-linear functions invert segment by segment.  The
defining layer-cake identity integral(phi) = integral(phi_star) then holds
exactly as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError

CONSTANT = "constant"
LINEAR = "linear"
NONINCREASING = "nonincreasing"
NONDECREASING = "nondecreasing"
HOLD = "hold"
ZERO = "zero"


@dataclass(frozen=True)
class MonotoneTab:
    """Right-continuous monotone function given by samples.

    For 'constant' interpolation values[k] is the value on
    [breakpoints[k], breakpoints[k+1]); for 'linear' the graph joins the
    sample points.  Queries below breakpoints[0] hold values[0].
    """

    breakpoints: np.ndarray
    values: np.ndarray
    direction: str = NONINCREASING
    interpolation: str = CONSTANT
    extrapolation: str = HOLD

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        if b.ndim != 1 or b.size < 1 or v.shape != b.shape:
            raise ValueError("breakpoints and values must be matching 1-d arrays")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if self.direction not in (NONINCREASING, NONDECREASING):
            raise ValueError(f"bad direction {self.direction!r}")
        if self.interpolation not in (CONSTANT, LINEAR):
            raise ValueError(f"bad interpolation {self.interpolation!r}")
        if self.extrapolation not in (HOLD, ZERO):
            raise ValueError(f"bad extrapolation {self.extrapolation!r}")
        d = np.diff(v)
        if self.direction == NONINCREASING and np.any(d > 0):
            raise ValueError("values are not nonincreasing")
        if self.direction == NONDECREASING and np.any(d < 0):
            raise ValueError("values are not nondecreasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        b, v = self.breakpoints, self.values
        if self.interpolation == CONSTANT:
            idx = np.clip(np.searchsorted(b, t, side="right") - 1, 0, v.size - 1)
            out = v[idx]
        else:
            out = np.interp(t, b, v)
        if self.extrapolation == ZERO:
            out = np.where(t >= b[-1], 0.0, out)
        elif self.interpolation == CONSTANT:
            out = np.where(t >= b[-1], v[-1], out)
        return out if out.shape else float(out)

    def integral(self) -> float:
        """Exact integral over [breakpoints[0], +inf)."""
        b, v = self.breakpoints, self.values
        tail_value = v[-1] if self.extrapolation == HOLD else 0.0
        if tail_value > 0:
            return np.inf
        if self.interpolation == CONSTANT:
            return float(np.sum(v[:-1] * np.diff(b)))
        return float(np.trapezoid(v, b))

    def support_bound(self) -> float:
        """sup of {t: value > 0}, assuming a nonincreasing tab."""
        b, v = self.breakpoints, self.values
        if self.extrapolation == HOLD and v[-1] > 0:
            return np.inf
        pos = np.nonzero(v > 0)[0]
        if pos.size == 0:
            return float(b[0])
        return float(b[min(pos[-1] + 1, b.size - 1)])


@dataclass(frozen=True)
class InversePair:
    """A nonincreasing function and its exact generalized inverse."""

    phi: MonotoneTab
    phi_star: MonotoneTab
    common_integral: float = field(default=np.nan)


def _invert_step(b: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact inverse of the step function with heights v[k] on
    [b[k], b[k+1]) and 0 beyond b[-1].

    Walk the gaps from the outside in: for s in [H_{j+1}, H_j) the sup of
    {phi > s} is the right edge b[j+1] of gap j.
    """
    heights = v[:-1]
    levels = [0.0]
    vals = []
    prev = 0.0
    for j in range(heights.size - 1, -1, -1):
        if heights[j] > prev:
            vals.append(float(b[j + 1]))
            levels.append(float(heights[j]))
            prev = heights[j]
    vals.append(0.0)
    return np.array(levels), np.array(vals)


def _invert_linear(b: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of a piecewise-linear nonincreasing function.

    The function must be strictly decreasing on its support (a flat run is
    allowed only at the start, at the maximum value); it is treated as zero
    beyond b[-1].  Interior flats would make the inverse jump between
    breakpoints, which a linear tab cannot represent exactly.
    """
    start = 0
    while start + 1 < v.size and v[start + 1] == v[start]:
        start += 1
    if np.any(np.diff(v[start:]) >= 0):
        raise PreconditionError(
            "linear tab has interior flat segments; use a constant tab "
            "for exact inversion"
        )
    bb, vv = b[start:], v[start:]
    out_b = vv[::-1].copy()
    out_v = bb[::-1].copy()
    if out_b[0] > 0.0:
        # jump of phi to zero at b[-1] becomes a flat head of phi_star
        out_b = np.concatenate(([0.0], out_b))
        out_v = np.concatenate(([out_v[0]], out_v))
    return out_b, out_v


def generalized_inverse(phi: MonotoneTab) -> InversePair:
    """Exact generalized inverse phi_star(s) = sup{t: phi(t) > s}.

    Preconditions: phi nonincreasing, nonnegative, integrable (in
    particular zero beyond its last breakpoint).  The returned pair carries
    the exact common integral.
    """
    if phi.direction != NONINCREASING:
        raise PreconditionError("generalized inverse needs a nonincreasing tab")
    if np.any(phi.values < 0):
        raise PreconditionError("values must be nonnegative")
    if phi.breakpoints[0] != 0.0:
        raise PreconditionError("tab must start at t = 0")
    integral = phi.integral()
    if not np.isfinite(integral):
        raise PreconditionError("tab is not integrable (positive hold tail)")

    b, v = phi.breakpoints, phi.values
    if phi.interpolation == CONSTANT:
        sb, sv = _invert_step(b, v)
        star = MonotoneTab(sb, sv, NONINCREASING, CONSTANT, HOLD)
    else:
        sb, sv = _invert_linear(b, v)
        star = MonotoneTab(sb, sv, NONINCREASING, LINEAR, ZERO)
    return InversePair(phi=phi, phi_star=star, common_integral=integral)
