"""Scalar proximity-operator calculus on the real line.

Penalties are convex, lower semi-continuous functions ``s`` with
``s >= s(0) = 0``.  The closed-form penalty classes below accept numpy
arrays for their parameters, so one object can describe a whole family of
per-coefficient penalties ``s_lambda`` at once (parameters broadcast against
the argument).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

SEARCH_BOUND = 1e9
_BISECT_STEPS = 200


def _arr(x):
    return np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# Intervals


@dataclass(frozen=True)
class Interval:
    """Closed interval of extended reals, possibly empty.

    ``clamped`` marks an endpoint that hit the search bound, i.e. the true
    set is unbounded on that side.
    """

    lo: float
    hi: float
    empty: bool = False
    clamped: bool = False

    def __post_init__(self):
        if not self.empty and self.lo > self.hi:
            raise ValueError(f"interval with lo={self.lo} > hi={self.hi}")

    @classmethod
    def empty_set(cls) -> "Interval":
        return cls(np.nan, np.nan, empty=True)

    @property
    def width(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo

    def __contains__(self, value) -> bool:
        return (not self.empty) and self.lo <= value <= self.hi

    def contains(self, value, tol: float = 0.0) -> bool:
        return (not self.empty) and self.lo - tol <= value <= self.hi + tol

    def sup_distance(self, x: float) -> float:
        """``sup_{y in I} |y - x|`` with the convention ``sup(empty) = inf``."""
        if self.empty:
            return np.inf
        return max(abs(self.lo - x), abs(self.hi - x))


# ---------------------------------------------------------------------------
# Penalties


class ScalarPenalty:
    """A penalty ``s`` in Gamma_0(R) with ``s >= s(0) = 0``.

    ``fn`` must accept numpy arrays.  ``analytic_prox`` and ``subgradient``
    are optional closed forms; without them :func:`prox` and
    :func:`subdifferential` fall back to numerics.
    """

    def __init__(
        self,
        fn: Callable,
        domain: tuple[float, float] = (-np.inf, np.inf),
        analytic_prox: Callable | None = None,
        subgradient: Callable | None = None,
        name: str = "penalty",
    ):
        self.fn = fn
        self.domain = domain
        self.analytic_prox = analytic_prox
        self._subgradient = subgradient
        self.name = name

    def __call__(self, y):
        return self.fn(_arr(y))

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"

    def subgradient(self, y):
        """Return ``(lo, hi)`` arrays bounding the subdifferential at ``y``."""
        if self._subgradient is not None:
            return self._subgradient(_arr(y))
        return numeric_subgradient(self, y)

    @property
    def has_subgradient(self) -> bool:
        return self._subgradient is not None

    def scaled(self, w) -> "ScalarPenalty":
        """The penalty ``w * s``."""
        w = _arr(w)
        return ScalarPenalty(lambda y: w * self.fn(y), self.domain, name=f"{w}*{self.name}")

    def dilated(self, k) -> "ScalarPenalty":
        """The penalty ``s(k * .)`` for ``k > 0``."""
        k = _arr(k)
        lo, hi = self.domain
        return ScalarPenalty(lambda y: self.fn(k * y), (lo / k, hi / k), name=f"{self.name}({k}*.)")


class HuberPenalty(ScalarPenalty):
    """``weight * L(delta, y)`` with the Huber loss ``L``.

    ``L(delta, y) = y**2 / 2`` for ``|y| <= delta`` and
    ``delta * (|y| - delta / 2)`` otherwise.
    """

    def __init__(self, weight, delta):
        self.weight = _arr(weight)
        self.delta = _arr(delta)
        if np.any(self.weight < 0) or np.any(self.delta <= 0):
            raise ValueError("Huber penalty needs weight >= 0 and delta > 0")
        super().__init__(self._eval, analytic_prox=self._prox, subgradient=self._subgrad, name="huber")

    def _eval(self, y):
        a = np.abs(y)
        d = self.delta
        return self.weight * np.where(a <= d, 0.5 * y * y, d * (a - 0.5 * d))

    def _prox(self, x):
        x = _arr(x)
        w, d = self.weight, self.delta
        inner = np.abs(x) <= d * (1.0 + w)
        return np.where(inner, x / (1.0 + w), x - np.sign(x) * w * d)

    def _subgrad(self, y):
        g = self.weight * np.clip(y, -self.delta, self.delta)
        return g, g

    def scaled(self, w):
        return HuberPenalty(self.weight * _arr(w), self.delta)

    def dilated(self, k):
        k = _arr(k)
        return HuberPenalty(self.weight * k * k, self.delta / k)


class HuberLoss(HuberPenalty):
    """The unit-weight Huber loss ``L(delta, .)``."""

    def __init__(self, delta):
        super().__init__(1.0, delta)


class AbsQuadPenalty(ScalarPenalty):
    """``quad * y**2 / 2 + slope * (|y| - knot)_+``.

    Covers quadratic (``slope = 0``), absolute value (``knot = 0``,
    ``quad = 0``) and the kinked quadratic behind plateau filters.
    """

    def __init__(self, quad=0.0, slope=0.0, knot=0.0):
        self.quad = _arr(quad)
        self.slope = _arr(slope)
        self.knot = _arr(knot)
        if np.any(self.quad < 0) or np.any(self.slope < 0) or np.any(self.knot < 0):
            raise ValueError("AbsQuadPenalty parameters must be nonnegative")
        super().__init__(self._eval, analytic_prox=self._prox, subgradient=self._subgrad, name="absquad")

    def _eval(self, y):
        return 0.5 * self.quad * y * y + self.slope * np.maximum(np.abs(y) - self.knot, 0.0)

    def _prox(self, x):
        x = _arr(x)
        a = np.abs(x)
        q1 = 1.0 + self.quad
        edge = q1 * self.knot
        out = np.where(
            a <= edge,
            a / q1,
            np.where(a <= edge + self.slope, self.knot, (a - self.slope) / q1),
        )
        return np.sign(x) * out

    def _subgrad(self, y):
        a = np.abs(y)
        s = np.sign(y)
        base = self.quad * a
        at_knot = a == self.knot
        beyond = a > self.knot
        lo_abs = np.where(beyond, base + self.slope, base)
        hi_abs = np.where(beyond | at_knot, base + self.slope, base)
        # at y = 0 with a zero knot the subdifferential is symmetric
        zero = (a == 0) & (self.knot == 0)
        lo = np.where(s >= 0, lo_abs, -hi_abs)
        hi = np.where(s >= 0, hi_abs, -lo_abs)
        lo = np.where(zero, -self.slope, lo)
        hi = np.where(zero, self.slope, hi)
        return lo, hi

    def scaled(self, w):
        w = _arr(w)
        return AbsQuadPenalty(self.quad * w, self.slope * w, self.knot)

    def dilated(self, k):
        k = _arr(k)
        return AbsQuadPenalty(self.quad * k * k, self.slope * k, self.knot / k)


def abs_penalty(t) -> AbsQuadPenalty:
    """``t * |y|``; its prox is soft thresholding at ``t``."""
    return AbsQuadPenalty(0.0, t, 0.0)


def quadratic_penalty(q) -> AbsQuadPenalty:
    """``q * y**2 / 2``; its prox is ``x / (1 + q)``."""
    return AbsQuadPenalty(q, 0.0, 0.0)


class MaskedIndicator(ScalarPenalty):
    """Zero penalty where ``active`` holds, indicator of ``{0}`` elsewhere."""

    def __init__(self, active):
        self.active = np.asarray(active, dtype=bool)
        super().__init__(self._eval, analytic_prox=self._prox, subgradient=self._subgrad, name="masked-indicator")
        if np.all(~self.active):
            self.domain = (0.0, 0.0)

    def _eval(self, y):
        return np.where(self.active | (y == 0), 0.0, np.inf)

    def _prox(self, x):
        return np.where(self.active, _arr(x), 0.0)

    def _subgrad(self, y):
        free = ~self.active & (y == 0)
        outside = ~self.active & (y != 0)
        lo = np.where(free, -np.inf, 0.0)
        hi = np.where(free, np.inf, 0.0)
        return np.where(outside, np.nan, lo), np.where(outside, np.nan, hi)

    def scaled(self, w):
        return MaskedIndicator(self.active)

    def dilated(self, k):
        return MaskedIndicator(self.active)


ZERO_PENALTY = AbsQuadPenalty(0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# Prox maps


@dataclass(frozen=True)
class ScalarProx:
    """A scalar map claimed to be monotone increasing and nonexpansive."""

    map: Callable
    monotone: bool = True
    nonexpansive: bool = True
    name: str = "prox"

    def __call__(self, x):
        return self.map(_arr(x))

    def verify(self, grid=None, tol: float = 1e-12) -> bool:
        """Check monotonicity, nonexpansiveness and ``p(0) = 0`` on a grid."""
        grid = np.linspace(-10, 10, 201) if grid is None else np.sort(_arr(grid))
        v = self(grid)
        dv, dg = np.diff(v), np.diff(grid)
        return bool(np.all(dv >= -tol) and np.all(dv <= dg * (1 + tol) + tol) and self(0.0) == 0.0)


def soft_threshold(t) -> ScalarProx:
    t = _arr(t)
    return ScalarProx(lambda x: np.sign(x) * np.maximum(np.abs(x) - t, 0.0), name=f"soft({t})")


def _ternary(objective, lo, hi, tol=1e-12, max_steps=200):
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    for _ in range(max_steps):
        if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(lo) + np.abs(hi))):
            break
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        f1, f2 = objective(m1), objective(m2)
        left = f1 <= f2
        hi = np.where(left, m2, hi)
        lo = np.where(left, lo, m1)
    return 0.5 * (lo + hi)


def prox(penalty: ScalarPenalty, x):
    """``argmin_y (x - y)**2 / 2 + penalty(y)``.

    Uses the closed form when the penalty has one; otherwise a ternary search
    on the bracket between 0 and ``x`` (the prox of a penalty minimized at 0
    lies there), clipped to the penalty's domain.
    """
    x = _arr(x)
    if penalty.analytic_prox is not None:
        return penalty.analytic_prox(x)
    dlo, dhi = penalty.domain
    lo = np.clip(np.minimum(x, 0.0), dlo, dhi)
    hi = np.clip(np.maximum(x, 0.0), dlo, dhi)
    out = _ternary(lambda y: 0.5 * (x - y) ** 2 + penalty(y), lo, hi)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Preimages of monotone maps


def _expand(fn, start, pred, bound):
    """Double ``start`` (elementwise, keeping sign) while ``pred(fn(x))`` holds."""
    x = start.copy()
    for _ in range(64):
        need = pred(fn(x)) & (np.abs(x) < bound)
        if not np.any(need):
            break
        x = np.where(need, np.clip(2.0 * x, -bound, bound), x)
    return x


def _bisect(fn, a, b, upper_pred):
    """Shrink ``[a, b]`` onto the boundary where ``upper_pred(fn(x))`` flips to True."""
    for _ in range(_BISECT_STEPS):
        m = 0.5 * (a + b)
        up = upper_pred(fn(m))
        b = np.where(up, m, b)
        a = np.where(up, a, m)
        if np.all((b - a) <= 4 * np.finfo(float).eps * np.maximum(np.abs(a), np.abs(b))):
            break
    return a, b


def preimage_bounds(fn: Callable, y, bound: float = SEARCH_BOUND):
    """Vectorized ``{x : fn(x) = y}`` for an increasing continuous ``fn``.

    Returns ``(lo, hi, empty, clamped)`` arrays.  ``lo`` is
    ``inf{x : fn(x) >= y}`` and ``hi`` is ``sup{x : fn(x) <= y}``, both found
    by bisection inside an expanding bracket limited to ``[-bound, bound]``.
    """
    y = _arr(y)
    shape = y.shape
    y = np.atleast_1d(y).astype(float)
    scale = np.maximum(1.0, np.abs(y))
    f = lambda x: _arr(fn(x))

    # lower endpoint: bracket a (fn < y) and b (fn >= y)
    b = _expand(f, scale.copy(), lambda v: v < y, bound)
    a = _expand(f, -scale.copy(), lambda v: v >= y, bound)
    above_range = f(b) < y
    lo_clamped = f(a) >= y
    _, lo = _bisect(f, a, b, lambda v: v >= y)
    lo = np.where(lo_clamped, -bound, lo)

    # upper endpoint: bracket a (fn <= y) and b (fn > y)
    a2 = _expand(f, -scale.copy(), lambda v: v > y, bound)
    b2 = _expand(f, scale.copy(), lambda v: v <= y, bound)
    below_range = f(a2) > y
    hi_clamped = f(b2) <= y
    hi, _ = _bisect(f, a2, b2, lambda v: v > y)
    hi = np.where(hi_clamped, bound, hi)

    empty = above_range | below_range
    # a strictly increasing map gives lo, hi within a few ulps of each other
    crossed = lo > hi
    gap = lo - hi
    tiny = 64 * np.finfo(float).eps * np.maximum(1.0, np.abs(lo))
    empty = empty | (crossed & (gap > tiny))
    mid = 0.5 * (lo + hi)
    lo = np.where(crossed & ~empty, mid, lo)
    hi = np.where(crossed & ~empty, mid, hi)
    lo = np.where(empty, np.nan, lo)
    hi = np.where(empty, np.nan, hi)
    clamped = (lo_clamped | hi_clamped) & ~empty
    return lo.reshape(shape), hi.reshape(shape), empty.reshape(shape), clamped.reshape(shape)


def prox_inverse(p: Callable, y: float, bound: float = SEARCH_BOUND) -> Interval:
    """The set ``{x : p(x) = y}`` for a monotone nonexpansive scalar map."""
    lo, hi, empty, clamped = preimage_bounds(p, y, bound)
    if bool(empty):
        return Interval.empty_set()
    return Interval(float(lo), float(hi), clamped=bool(clamped))


# ---------------------------------------------------------------------------
# Subdifferentials


def numeric_subgradient(penalty: ScalarPenalty, y, h: float = 1e-4):
    """One-sided difference quotients with one Richardson step.

    Exact for piecewise affine/quadratic penalties whenever no kink lies
    within ``h`` of ``y`` (except at ``y`` itself).
    """
    y = _arr(y)
    s0 = penalty(y)

    def one_sided(sign):
        d1 = (penalty(y + sign * h) - s0) / h
        d2 = (penalty(y + sign * h / 2) - s0) / (h / 2)
        with np.errstate(invalid="ignore"):
            d = 2 * d2 - d1
        return np.where(np.isinf(d1) | np.isinf(d2), np.inf, d)

    right = one_sided(+1.0)
    left = -one_sided(-1.0)
    return left, right


def subdifferential(penalty: ScalarPenalty, x: float, h: float = 1e-4) -> Interval:
    """``[min ds(x), max ds(x)]`` from one-sided difference quotients."""
    lo_d, hi_d = penalty.domain
    if not (lo_d <= x <= hi_d) or not np.isfinite(penalty(x)):
        raise ValueError(f"x={x} outside the penalty domain {penalty.domain}")
    lo, hi = (float(v) for v in numeric_subgradient(penalty, x, h))
    if lo > hi:  # rounding noise on a differentiable point
        lo = hi = 0.5 * (lo + hi)
    return Interval(lo, hi)


# ---------------------------------------------------------------------------
# Penalty recovery


class RecoveredPenalty(ScalarPenalty):
    """Penalty ``s`` with ``prox_s = p``, reconstructed numerically from ``p``.

    With ``q = min p^{-1}`` one has ``s(y) = int_0^y (q(t) - t) dt``.  The
    integral of ``q`` is evaluated through the area identity
    ``int_0^y q = y q(y) - int_0^{q(y)} p``, so the quadrature runs over the
    continuous map ``p`` (trapezoid rule, step ``step``) rather than over
    ``q``, which jumps wherever ``p`` has a plateau.
    """

    def __init__(self, p: Callable, step: float = 1e-3):
        self.p = p
        self.step = step
        self._extent = 0.0
        self._grid = np.zeros(1)
        self._cum = np.zeros(1)
        super().__init__(self._eval, name="recovered")

    def _ensure(self, extent):
        if extent <= self._extent:
            return
        n = int(np.ceil(extent / self.step)) + 1
        t = self.step * np.arange(-n, n + 1)
        v = _arr(self.p(t))
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * self.step)])
        cum -= cum[n]  # anchor the integral at t = 0
        self._grid, self._cum, self._extent = t, cum, t[-1]

    def primitive(self, x):
        """``int_0^x p(t) dt``."""
        x = _arr(x)
        self._ensure(float(np.max(np.abs(x), initial=0.0)) + self.step)
        t, cum, h = self._grid, self._cum, self.step
        i = np.clip(np.floor((x - t[0]) / h).astype(int), 0, len(t) - 2)
        ti = t[i]
        return cum[i] + 0.5 * (x - ti) * (_arr(self.p(ti)) + _arr(self.p(x)))

    def _eval(self, y):
        y = _arr(y)
        lo, hi, empty, clamped = preimage_bounds(self.p, y)
        lo_clamped = clamped & (lo <= -SEARCH_BOUND)
        x = np.where(lo_clamped, hi, lo)
        x = np.where(empty | ~np.isfinite(x) | (np.abs(x) >= SEARCH_BOUND), 0.0, x)
        val = y * x - self.primitive(x) - 0.5 * y * y
        val = np.where(empty, np.inf, val)
        return np.where(y == 0, 0.0, val)


def recover_penalty(p: Callable, x, step: float = 1e-3):
    """Value of the penalty ``s`` with ``s(0) = 0`` and ``prox_s = p`` at ``x``.

    Returns ``+inf`` where ``x`` is outside the range of ``p``.
    """
    val = RecoveredPenalty(p, step)(x)
    return val if np.ndim(val) else float(val)
