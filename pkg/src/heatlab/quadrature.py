"""Quadrature helpers used throughout the package.

Finite intervals use adaptive Simpson with a relative tolerance and an
absolute floor.  Improper integrals (infinite upper limit, or an integrand
singular at the lower endpoint) are reduced to sequences of finite integrals
with a geometric convergence test; a sequence that keeps growing is reported
as divergent (+inf) rather than raising, so callers can decide whether
divergence is an error or an answer (parabolicity classification).

Cumulative integrals along a sorted grid are computed with composite
Gauss-Legendre panels, optionally in log space so that integrands of size
exp(700) and beyond can be accumulated without overflow.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NumericFailure

REL_TOL = 1e-8
ABS_FLOOR = 1e-14
MAX_DEPTH = 48

# Nodes and weights for 8-point Gauss-Legendre on [-1, 1].
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _simpson(fa: float, fm: float, fb: float, a: float, b: float) -> float:
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = REL_TOL,
    abs_floor: float = ABS_FLOOR,
    max_depth: int = MAX_DEPTH,
) -> float:
    """Integral of ``f`` over the finite interval [a, b].

    Returns +inf as soon as a non-finite integrand value is seen, which the
    improper-integral drivers interpret as divergence.  Raises
    :class:`NumericFailure` if the recursion cannot reach the tolerance.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("adaptive_simpson needs finite endpoints")
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, rel_tol, abs_floor, max_depth)

    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    if not (np.isfinite(fa) and np.isfinite(fm) and np.isfinite(fb)):
        return np.inf
    whole = _simpson(fa, fm, fb, a, b)

    # Iterative refinement with an explicit stack; each frame carries the
    # endpoint values so every integrand point is evaluated once.
    stack = [(a, b, fa, fm, fb, whole, 0)]
    total = 0.0
    while stack:
        a0, b0, f0, f1, f2, s0, depth = stack.pop()
        m0 = 0.5 * (a0 + b0)
        lm, rm = 0.5 * (a0 + m0), 0.5 * (m0 + b0)
        flm, frm = f(lm), f(rm)
        if not (np.isfinite(flm) and np.isfinite(frm)):
            return np.inf
        left = _simpson(f0, flm, f1, a0, m0)
        right = _simpson(f1, frm, f2, m0, b0)
        err = (left + right - s0) / 15.0
        tol = max(abs_floor, rel_tol * (abs(total) + abs(left + right)))
        if abs(err) <= tol:
            total += left + right + err
        elif depth >= max_depth:
            raise NumericFailure(
                f"adaptive Simpson stalled on [{a0!r}, {b0!r}] at depth {depth}"
            )
        else:
            stack.append((a0, m0, f0, flm, f1, left, depth + 1))
            stack.append((m0, b0, f1, frm, f2, right, depth + 1))
    return total


def tail_integral(
    f: Callable[[float], float],
    a: float,
    rel_change: float = 1e-9,
    r0: float = 1.0,
    max_doublings: int = 60,
) -> float:
    """Integral of ``f`` over [a, +inf) by geometric truncation.

    The truncation radius doubles until the relative change of the running
    total drops below ``rel_change``.  Returns +inf when the totals grow
    without settling (divergent tail).
    """
    upper = a + max(r0, abs(a) * 0.5, 1.0)
    total = adaptive_simpson(f, a, upper)
    for _ in range(max_doublings):
        if not np.isfinite(total):
            return np.inf
        piece = adaptive_simpson(f, upper, a + 2.0 * (upper - a))
        upper = a + 2.0 * (upper - a)
        new_total = total + piece
        if not np.isfinite(new_total):
            return np.inf
        if abs(new_total - total) <= rel_change * max(abs(new_total), ABS_FLOOR):
            return new_total
        total = new_total
    return np.inf


def left_singular_integral(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_change: float = 1e-9,
    max_shrinks: int = 60,
) -> float:
    """Integral over (a, b] when ``f`` may blow up at ``a``.

    The lower endpoint approaches ``a`` geometrically; an integrable
    singularity converges, a non-integrable one returns +inf.
    """
    if not b > a:
        raise ValueError("left_singular_integral needs b > a")
    try:
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            fa = f(a)
    except ZeroDivisionError:
        fa = np.inf
    if np.isfinite(fa):
        return adaptive_simpson(f, a, b)
    eps = (b - a) * 0.25
    total = adaptive_simpson(f, a + eps, b)
    for _ in range(max_shrinks):
        if not np.isfinite(total):
            return np.inf
        piece = adaptive_simpson(f, a + eps * 0.25, a + eps)
        eps *= 0.25
        new_total = total + piece
        if not np.isfinite(new_total):
            return np.inf
        if abs(new_total - total) <= rel_change * max(abs(new_total), ABS_FLOOR):
            return new_total
        total = new_total
    return np.inf


def _panel_points(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights for a batch of panels."""
    half = 0.5 * (hi - lo)[:, None]
    mid = 0.5 * (hi + lo)[:, None]
    pts = mid + half * _GL_X[None, :]
    wts = half * _GL_W[None, :]
    return pts, wts


def _subdivide(nodes: np.ndarray, max_step: float, log_f=None, max_log_step: float = 0.5):
    """Split [nodes[i], nodes[i+1]] gaps into panels.

    Panels are capped at ``max_step`` in width and, when ``log_f`` is given,
    at ``max_log_step`` variation of log f so that a single Gauss panel stays
    accurate on exponentially varying integrands.
    """
    lo_list, hi_list, owner = [], [], []
    gaps = np.diff(nodes)
    if log_f is not None:
        lf = log_f(nodes)
        dlf = np.abs(np.diff(lf))
    for i, gap in enumerate(gaps):
        if gap <= 0:
            continue
        k = int(np.ceil(gap / max_step))
        if log_f is not None and np.isfinite(dlf[i]):
            k = max(k, int(np.ceil(dlf[i] / max_log_step)))
        k = max(1, min(k, 4096))
        edges = np.linspace(nodes[i], nodes[i + 1], k + 1)
        lo_list.append(edges[:-1])
        hi_list.append(edges[1:])
        owner.append(np.full(k, i))
    if not lo_list:
        return np.empty(0), np.empty(0), np.empty(0, dtype=int)
    return np.concatenate(lo_list), np.concatenate(hi_list), np.concatenate(owner)


def cumulative_integral(
    f: Callable[[np.ndarray], np.ndarray],
    nodes: np.ndarray,
    max_step: float = 0.25,
) -> np.ndarray:
    """Cumulative integral of ``f`` from nodes[0] along sorted ``nodes``.

    Composite Gauss-Legendre with panel subdivision; exact cumulative sums at
    every node, vectorized over panels.
    """
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 1:
        raise ValueError("nodes must be a 1-d array")
    if np.any(np.diff(nodes) < 0):
        raise ValueError("nodes must be sorted ascending")
    out = np.zeros(nodes.size)
    lo, hi, owner = _subdivide(nodes, max_step)
    if lo.size == 0:
        return out
    pts, wts = _panel_points(lo, hi)
    vals = f(pts.ravel()).reshape(pts.shape)
    panel = np.sum(vals * wts, axis=1)
    per_gap = np.zeros(nodes.size - 1)
    np.add.at(per_gap, owner, panel)
    out[1:] = np.cumsum(per_gap)
    return out


def cumulative_log_integral(
    log_f: Callable[[np.ndarray], np.ndarray],
    nodes: np.ndarray,
    max_step: float = 0.25,
    max_log_step: float = 0.5,
) -> np.ndarray:
    """log of the cumulative integral of exp(log_f) along sorted ``nodes``.

    Panels are summed with logsumexp-style scaling so integrands far beyond
    the overflow threshold accumulate stably.  Entry 0 is -inf (zero mass).
    """
    nodes = np.asarray(nodes, dtype=float)
    lo, hi, owner = _subdivide(nodes, max_step, log_f=log_f, max_log_step=max_log_step)
    out = np.full(nodes.size, -np.inf)
    if lo.size == 0:
        return out
    pts, wts = _panel_points(lo, hi)
    lv = log_f(pts.ravel()).reshape(pts.shape)
    scale = np.max(lv, axis=1)
    scale = np.where(np.isfinite(scale), scale, 0.0)
    panel = np.sum(np.exp(lv - scale[:, None]) * wts, axis=1)
    log_panel = np.where(panel > 0, scale + np.log(np.maximum(panel, 1e-300)), -np.inf)
    per_gap = np.full(nodes.size - 1, -np.inf)
    np.logaddexp.at(per_gap, owner, log_panel)
    return np.concatenate(([-np.inf], np.logaddexp.accumulate(per_gap)))
