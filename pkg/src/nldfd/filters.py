"""Non-linear regularizing filters, their penalties and assumption checkers.

A filter family maps ``(alpha, kappa, c)`` to ``phi_alpha(kappa, c)``; all
three arguments broadcast.  Families that are known to be proximity
operators carry the matching penalty ``s_{alpha, lambda}`` so that
``phi_alpha(kappa, .) = prox_{s_{alpha, lambda}}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .prox_calculus import (
    SEARCH_BOUND,
    AbsQuadPenalty,
    HuberPenalty,
    MaskedIndicator,
    ScalarPenalty,
    ScalarProx,
    abs_penalty,
    preimage_bounds,
    quadratic_penalty,
)

FAMILY_NAMES = ("soft", "huber-a", "huber-b", "pnp-c", "tikhonov", "tsvd", "from-phi1")

ELL_RULES = {
    "linear": lambda a: 1.0 / (1.0 + np.asarray(a, dtype=float)),
    "sqrt": lambda a: 1.0 / (1.0 + np.sqrt(np.asarray(a, dtype=float))),
}


def _arr(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class ScalarFilterFamily:
    """A family ``phi_alpha(kappa, .)`` with metadata.

    ``constants`` holds the theoretical constants the assumption checkers
    use.  Entries may be callables of ``kappa_max`` when the constant depends
    on the operator (``c`` in the stationary Huber example does).
    """

    name: str
    evaluate_fn: Callable
    params: dict = field(default_factory=dict)
    penalty_fn: Callable | None = None
    constants: dict = field(default_factory=dict)
    ell_rule: str | None = None
    alpha_max: float = np.inf
    inverse_fn: Callable | None = None

    def evaluate(self, alpha, kappa, c):
        alpha, kappa = _arr(alpha), _arr(kappa)
        if np.any(~(alpha > 0)) or np.any(alpha > self.alpha_max):
            raise ValueError(f"{self.name}: alpha must lie in (0, {self.alpha_max}]")
        if np.any(~(kappa > 0)):
            raise ValueError(f"{self.name}: kappa must be positive")
        out = self.evaluate_fn(alpha, kappa, _arr(c))
        return out if np.ndim(out) else float(out)

    __call__ = evaluate

    @property
    def has_penalty(self) -> bool:
        return self.penalty_fn is not None

    def analytic_penalty(self, alpha, kappa) -> ScalarPenalty:
        """``s_{alpha, lambda}`` with ``prox_s = phi_alpha(kappa, .)``; params broadcast over kappa."""
        if self.penalty_fn is None:
            raise ValueError(f"family {self.name!r} has no analytic penalty")
        return self.penalty_fn(_arr(alpha), _arr(kappa))

    def prox_map(self, alpha, kappa) -> ScalarProx:
        return ScalarProx(lambda x: self.evaluate(alpha, kappa, x), name=f"{self.name}[{alpha},{kappa}]")

    def preimage(self, alpha, kappa, y):
        """``(lo, hi, empty, clamped)`` describing ``phi_alpha(kappa, .)^{-1}(y)``."""
        if self.inverse_fn is not None:
            return self.inverse_fn(_arr(alpha), _arr(kappa), _arr(y))
        return preimage_bounds(lambda x: self.evaluate(alpha, kappa, x), y)

    def ell(self, alpha):
        if self.ell_rule is None:
            return None
        return ELL_RULES[self.ell_rule](alpha)

    def constant(self, key, kappa_max=1.0):
        v = self.constants.get(key)
        return v(kappa_max) if callable(v) else v


# ---------------------------------------------------------------------------
# Families


def soft_threshold_family() -> ScalarFilterFamily:
    def ev(a, k, c):
        return np.sign(c) * np.maximum(np.abs(c) - a / k, 0.0)

    return ScalarFilterFamily(
        "soft",
        ev,
        penalty_fn=lambda a, k: abs_penalty(a / k),
        constants={"b": 1.0, "c": 1.0, "d": 1.0, "e": 0.5, "stationary": True},
    )


def _check_pos(**kw):
    for k, v in kw.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{k} must be positive, got {v}")


def huber_stationary_family(b: float = 1.0, d: float = 1.0) -> ScalarFilterFamily:
    _check_pos(b=b, d=d)

    def ev(a, k, x):
        k2 = k * k
        edge = d * (k2 + a * b) / (k * (k2 + b))
        inner = np.abs(x) <= edge
        return np.where(inner, k2 / (k2 + a * b) * x, x - np.sign(x) * d * b * a / (k * (k2 + b)))

    c_of = lambda kmax: d / (kmax**2 + b)
    return ScalarFilterFamily(
        "huber-a",
        ev,
        params={"b": b, "d": d},
        penalty_fn=lambda a, k: HuberPenalty(a * b / (k * k), d * k / (k * k + b)),
        constants={"b": b, "c": c_of, "d": lambda kmax: b * c_of(kmax), "e": 1.0 / (2.0 * np.sqrt(b)), "stationary": True},
    )


def huber_nonstationary_family(b: float = 1.0, d: float = 1.0) -> ScalarFilterFamily:
    _check_pos(b=b, d=d)

    def ev(a, k, x):
        k2 = k * k
        inner = np.abs(x) <= d * a / k
        return np.where(inner, k2 / (k2 + a * b) * x, x - np.sign(x) * d * b * a * a / (k * (k2 + a * b)))

    return ScalarFilterFamily(
        "huber-b",
        ev,
        params={"b": b, "d": d},
        penalty_fn=lambda a, k: HuberPenalty(a * b / (k * k), d * a * k / (k * k + a * b)),
        # phi_1 coincides with huber-a, so its A2 constants are valid at alpha = 1
        constants={"b": b, "c": lambda kmax: d / (kmax**2 + b), "d": d, "e": 1.0 / (2.0 * np.sqrt(b)), "stationary": False},
    )


def staircase_slope(alpha, kappa, gamma, ell_rule="linear"):
    """Inner slope ``gamma k^2 l / (1 - l (1 - gamma k^2))`` of the staircase filter."""
    g = gamma * _arr(kappa) ** 2
    ell = ELL_RULES[ell_rule](alpha)
    return g * ell / (1.0 - ell * (1.0 - g))


def pnp_staircase_family(gamma: float, kappa_max: float = 1.0, ell_rule: str = "linear") -> ScalarFilterFamily:
    _check_pos(gamma=gamma, kappa_max=kappa_max)
    if gamma * kappa_max**2 >= 1:
        raise ValueError(f"gamma={gamma} must lie in (0, 1/kappa_max^2) = (0, {1 / kappa_max**2})")
    if ell_rule not in ELL_RULES:
        raise ValueError(f"unknown ell rule {ell_rule!r}")

    def ev(a, k, x):
        if np.any(gamma * k * k >= 1):
            raise ValueError("pnp-c needs gamma * kappa^2 < 1")
        m = staircase_slope(a, k, gamma, ell_rule)
        ax = np.abs(x)
        t = a / 3.0
        out = np.where(ax <= t, ax, np.where(ax <= 2 * t, t, ax - t))
        return m * np.sign(x) * out

    def pen(a, k):
        m = staircase_slope(a, k, gamma, ell_rule)
        return AbsQuadPenalty(1.0 / m - 1.0, a / 3.0, m * a / 3.0)

    return ScalarFilterFamily(
        "pnp-c",
        ev,
        params={"gamma": gamma, "kappa_max": kappa_max, "ell_rule": ell_rule},
        penalty_fn=pen,
        constants={"gamma": gamma, "d": 1.0, "e": 1.0, "stationary": False},
        ell_rule=ell_rule,
    )


def linear_family(kind: str) -> ScalarFilterFamily:
    if kind == "tikhonov":
        return ScalarFilterFamily(
            "tikhonov",
            lambda a, k, c: k * k / (k * k + a) * c,
            params={"kind": kind},
            penalty_fn=lambda a, k: quadratic_penalty(a / (k * k)),
            constants={"b": 1.0, "c": 1.0, "d": 1.0, "e": 0.5, "stationary": True},
        )
    if kind == "tsvd":
        return ScalarFilterFamily(
            "tsvd",
            lambda a, k, c: np.where(k * k >= a, c, 0.0 * c),
            params={"kind": kind},
            penalty_fn=lambda a, k: MaskedIndicator(k * k >= a),
            constants={"d": 1.0, "e": 1.0, "stationary": False},
        )
    raise ValueError(f"unknown linear filter kind {kind!r}; use 'tikhonov' or 'tsvd'")


def linear_filter_function(kind: str, alpha, kappa):
    """``f_alpha(kappa)`` with ``phi_alpha(kappa, c) = kappa f_alpha(kappa) c``."""
    a, k = _arr(alpha), _arr(kappa)
    if kind == "tikhonov":
        return k / (k * k + a)
    if kind == "tsvd":
        return np.where(k * k >= a, 1.0 / k, 0.0)
    raise ValueError(kind)


def identity_family() -> ScalarFilterFamily:
    return ScalarFilterFamily("identity", lambda a, k, c: c + 0.0 * a * k, penalty_fn=lambda a, k: AbsQuadPenalty(0.0 * k))


def huber_phi1(b: float = 1.0, d: float = 1.0) -> Callable:
    """The single generating function ``phi_1`` of the stationary Huber family."""

    def phi1(k, x):
        k, x = _arr(k), _arr(x)
        k2 = k * k
        return np.where(np.abs(x) <= d / k, k2 / (k2 + b) * x, x - np.sign(x) * d * b / (k * (k2 + b)))

    return phi1


def family_from_phi1(phi1: Callable, b: float = 1.0, c: float = 1.0, name: str = "from-phi1") -> ScalarFilterFamily:
    """Family generated by ``phi_alpha = ((1 - alpha) id + alpha phi_1^{-1})^{-1}``.

    ``x`` lies in ``(1 - alpha) y + alpha phi_1^{-1}(y)`` exactly when
    ``y = phi_1(z)`` for the ``z`` solving ``(1 - alpha) phi_1(z) + alpha z = x``.
    That map is continuous and strictly increasing for ``alpha > 0``, so one
    bisection (via :func:`preimage_bounds`) gives ``z`` and then ``y``.
    ``alpha`` may equal 1, where the formula returns ``phi_1`` itself.
    """
    _check_pos(b=b, c=c)

    def ev(a, k, x):
        a, k, x = np.broadcast_arrays(_arr(a), _arr(k), _arr(x))
        shape = x.shape
        a, k, x = a.ravel(), k.ravel(), x.ravel()
        g = lambda z: (1 - a) * _arr(phi1(k, z)) + a * z
        lo, hi, empty, _ = preimage_bounds(g, x)
        if np.any(empty):
            bad = float(x[np.flatnonzero(empty)[0]])
            raise ValueError(f"empty preimage while inverting the generated map at x={bad}")
        y = _arr(phi1(k, 0.5 * (lo + hi)))
        return y.reshape(shape)

    def inv(a, k, y):
        lo, hi, empty, clamped = preimage_bounds(lambda t: phi1(k, t), y)
        return (1 - a) * y + a * lo, (1 - a) * y + a * hi, empty, clamped

    return ScalarFilterFamily(
        name, ev, params={"b": b, "c": c}, constants={"b": b, "c": c, "d": b * c, "e": 1.0 / (2.0 * np.sqrt(b)), "stationary": True},
        alpha_max=1.0,
        inverse_fn=inv,
    )


def make_family(name: str, **params) -> ScalarFilterFamily:
    """Build a family by CLI/config name."""
    p = {k: v for k, v in params.items() if v is not None}
    if name == "soft":
        return soft_threshold_family()
    if name == "huber-a":
        return huber_stationary_family(p.get("b", 1.0), p.get("d", 1.0))
    if name == "huber-b":
        return huber_nonstationary_family(p.get("b", 1.0), p.get("d", 1.0))
    if name == "pnp-c":
        return pnp_staircase_family(p.get("gamma", 0.9), p.get("kappa_max", 1.0), p.get("ell_rule", "linear"))
    if name in ("tikhonov", "tsvd"):
        return linear_family(name)
    if name == "from-phi1":
        b, d = p.get("b", 1.0), p.get("d", 1.0)
        return family_from_phi1(huber_phi1(b, d), b, d / (p.get("kappa_max", 1.0) ** 2 + b))
    raise ValueError(f"unknown filter family {name!r}; choose from {', '.join(FAMILY_NAMES)}")


# ---------------------------------------------------------------------------
# kappa-regularizers


@dataclass(frozen=True, eq=False)
class KappaRegularizer:
    """``R_alpha(x) = sum_l s_{alpha, l}(kappa_l x_l)`` for one family."""

    family: ScalarFilterFamily
    kappa: np.ndarray

    @property
    def stationary(self) -> bool:
        return bool(self.family.constants.get("stationary", False))

    def penalties(self, alpha) -> ScalarPenalty:
        return self.family.analytic_penalty(alpha, self.kappa)

    def terms(self, alpha, x) -> np.ndarray:
        return _arr(self.penalties(alpha)(self.kappa * _arr(x)))

    def __call__(self, alpha, x) -> float:
        t = self.terms(alpha, x)
        return float(np.inf) if np.any(np.isinf(t)) else float(np.sum(t))

    def stationarity_gap(self, alpha, samples) -> float:
        """``max |R_alpha(x) - alpha R_1(x)|`` over sample rows."""
        return max(abs(self(alpha, x) - alpha * self(1.0, x)) for x in np.atleast_2d(samples))


# ---------------------------------------------------------------------------
# Reports


@dataclass
class AssumptionReport:
    """``worst_case`` is the largest signed violation; it is <= 0 iff the check passed."""

    assumption_id: str
    constants_used: dict
    grid: dict
    worst_case: float
    parts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.worst_case <= 0)

    def to_dict(self) -> dict:
        return {
            "assumption": self.assumption_id,
            "constants_used": self.constants_used,
            "grid": self.grid,
            "pass": self.passed,
            "worst_case": self.worst_case,
            "parts": self.parts,
        }


def _worst(values) -> float:
    values = [float(v) for v in values]
    return max(values) if values else -np.inf


def _part(worst: float) -> dict:
    return {"pass": bool(worst <= 0), "worst_case": float(worst)}


DEFAULT_KAPPAS = tuple(2.0**-j for j in range(0, 7))
DEFAULT_ALPHAS = tuple(2.0**-k for k in range(0, 11))


def c_grid(kappa: float = 1.0, n: int = 201, scaled: bool = False) -> np.ndarray:
    s = kappa if scaled else 1.0
    return np.linspace(-10 * s, 10 * s, n)


def _axiom_grid(kappa, n):
    return np.union1d(c_grid(kappa, n), c_grid(kappa, n, scaled=True))


def check_filter_axioms(
    family: ScalarFilterFamily,
    kappas=DEFAULT_KAPPAS,
    alphas=DEFAULT_ALPHAS,
    n: int = 201,
    f4_schedule=None,
    f4_tol: float = 1e-3,
    slack: float = 1e-12,
) -> dict:
    """Grid suite for F1 (monotone), F2 (nonexpansive), F3 (fixes 0), F4 (converges to id).

    F1-F3 use ``[-10, 10]`` together with the kappa-scaled grid
    ``kappa * [-10, 10]``.  F4 is judged on the kappa-scaled grid, where exact
    data coefficients ``kappa * x`` live; the residual on the unscaled grid is
    reported alongside.
    """
    f4_schedule = [2.0**-k for k in range(0, 21)] if f4_schedule is None else list(f4_schedule)
    alphas = [a for a in alphas if a <= family.alpha_max]
    f4_schedule = [a for a in f4_schedule if a <= family.alpha_max]
    w1 = w2 = w3 = -np.inf
    for k in kappas:
        g = _axiom_grid(k, n)
        dg = np.diff(g)
        for a in alphas:
            v = _arr(family.evaluate(a, k, g))
            dv = np.diff(v)
            w1 = max(w1, float(np.max(-dv)) - slack)
            w2 = max(w2, float(np.max(np.abs(dv) - dg)) - slack)
            w3 = max(w3, abs(float(family.evaluate(a, k, 0.0))))
    w3 = w3 if w3 > 0 else -1.0  # F3 is exact: any nonzero value fails
    trace = []
    for a in f4_schedule:
        scaled = max(float(np.max(np.abs(_arr(family.evaluate(a, k, c_grid(k, n, True))) - c_grid(k, n, True)))) for k in kappas)
        plain = max(float(np.max(np.abs(_arr(family.evaluate(a, k, c_grid(k, n))) - c_grid(k, n)))) for k in kappas)
        trace.append({"alpha": a, "residual": scaled, "residual_unscaled": plain})
    final = trace[-1]["residual"] if trace else np.inf
    parts = {
        "F1": _part(w1),
        "F2": _part(w2),
        "F3": _part(w3),
        "F4": {**_part(final - f4_tol), "final_alpha": f4_schedule[-1] if f4_schedule else None, "final_residual": final, "trace": trace},
    }
    return {
        "family": family.name,
        "grid": {"points": n, "c_range": "[-10,10] and kappa*[-10,10]", "kappas": list(kappas), "alphas": list(alphas)},
        "parts": parts,
        "pass": all(p["pass"] for p in parts.values()),
    }


def _lip(values, grid) -> float:
    """Largest difference quotient over all grid pairs."""
    dv = values[:, None] - values[None, :]
    dg = grid[:, None] - grid[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.abs(dv) / np.abs(dg)
    return float(np.nanmax(np.where(dg != 0, q, np.nan)))


def empirical_lipschitz(fn: Callable, grid, fine: int = 4001) -> float:
    """Max difference quotient over all pairs of ``grid`` and adjacent points of a fine grid."""
    grid = np.unique(_arr(grid))
    # drop near-duplicates: quotients over ulp-sized gaps are pure rounding noise
    keep = np.concatenate([[True], np.diff(grid) > 1e-9 * np.maximum(1.0, np.abs(grid[1:]))])
    grid = grid[keep]
    pairs = _lip(_arr(fn(grid)), grid)
    f = np.linspace(grid[0], grid[-1], fine)
    adj = float(np.max(np.abs(np.diff(_arr(fn(f)))) / np.diff(f)))
    return max(pairs, adj)


def _endpoints(lo, hi, clamped):
    lo = np.where(clamped & (lo <= -SEARCH_BOUND), -np.inf, lo)
    hi = np.where(clamped & (hi >= SEARCH_BOUND), np.inf, hi)
    return lo, hi


def _scaled_preimage(family, a, k, y):
    lo, hi, empty, clamped = family.preimage(a, k, y)
    lo, hi = _endpoints(lo, hi, clamped)
    with np.errstate(invalid="ignore"):
        return (lo - y) / a, (hi - y) / a, empty


def a1_grid(n: int = 41) -> np.ndarray:
    """Uniform points on [-10, 10] plus log-spaced magnitudes down to 1e-6."""
    g = np.geomspace(1e-6, 10, n)
    return np.union1d(np.linspace(-10, 10, n), np.union1d(-g, g))


def check_assumption_A(
    family: ScalarFilterFamily,
    kappas=DEFAULT_KAPPAS,
    alphas=(1.0, 0.3, 0.05, 2.0**-6),
    y_points: int = 41,
    b: float | None = None,
    c: float | None = None,
    alpha_tilde: float = 1.0,
    x_points: int = 201,
    tol: float = 1e-6,
) -> AssumptionReport:
    """A1 via scaled preimages at ``alpha`` and ``alpha / 2``; A2 at ``alpha_tilde``."""
    kappas = list(kappas)
    kmax = max(kappas)
    b = family.constant("b", kmax) if b is None else b
    c = family.constant("c", kmax) if c is None else c
    a1 = -np.inf
    a1_where = None
    for k in kappas:
        y = a1_grid(y_points) * k
        for a in alphas:
            a2_ = a / 2.0
            if a > family.alpha_max:
                continue
            lo1, hi1, e1 = _scaled_preimage(family, a, k, y)
            lo2, hi2, e2 = _scaled_preimage(family, a2_, k, y)
            with np.errstate(invalid="ignore"):
                dlo = np.where(np.isinf(lo1) & (lo1 == lo2), 0.0, np.abs(lo1 - lo2))
                dhi = np.where(np.isinf(hi1) & (hi1 == hi2), 0.0, np.abs(hi1 - hi2))
            d = np.where(e1 & e2, 0.0, np.where(e1 | e2, np.inf, np.maximum(dlo, dhi)))
            d = np.nan_to_num(d, nan=np.inf)
            i = int(np.argmax(d))
            if d[i] - tol > a1:
                a1, a1_where = float(d[i] - tol), {"kappa": k, "alpha": a, "y": float(y[i])}
    a2 = -np.inf
    if b is None or c is None:
        a2 = np.inf
    else:
        for k in kappas:
            lo, _, empty, _ = family.preimage(alpha_tilde, k, c * k)
            if bool(empty):
                a2 = np.inf
                continue
            x = np.linspace(-float(lo), float(lo), x_points)
            v = np.abs(_arr(family.evaluate(alpha_tilde, k, x))) - k * k / (k * k + alpha_tilde * b) * np.abs(x)
            a2 = max(a2, float(np.max(v - 1e-12 * np.abs(x))))
    parts = {"A1": {**_part(a1), "at": a1_where}, "A2": _part(a2)}
    return AssumptionReport(
        "A",
        {"b": b, "c": c, "alpha_tilde": alpha_tilde, "tol_A1": tol},
        {"kappas": kappas, "alphas": list(alphas), "y_points": y_points, "x_points": x_points, "A1_pairs": "alpha vs alpha/2"},
        max(a1, a2),
        parts,
    )


def b1_grid(n: int = 201) -> np.ndarray:
    g = np.geomspace(1e-4, 10, n)
    return np.union1d(np.union1d(-g, g), np.linspace(-10, 10, n))


def check_assumption_B(
    family: ScalarFilterFamily,
    kappas=DEFAULT_KAPPAS,
    alphas=DEFAULT_ALPHAS,
    d: float | None = None,
    e: float | None = None,
    n: int = 201,
    slack: float = 1e-12,
) -> AssumptionReport:
    """B1 pointwise along decreasing alpha; B2 on ``|x| <= d alpha / kappa``."""
    kappas = list(kappas)
    kmax = max(kappas)
    d = family.constant("d", kmax) if d is None else d
    e = family.constant("e", kmax) if e is None else e
    seq = sorted((a for a in alphas if a <= family.alpha_max), reverse=True)
    b1 = -np.inf
    b1_where = None
    for k in kappas:
        x = np.union1d(b1_grid(n), b1_grid(n) * k)
        prev = None
        for a in seq:
            cur = np.abs(_arr(family.evaluate(a, k, x)))
            if prev is not None:
                v = prev - cur - slack * np.maximum(1.0, prev)
                i = int(np.argmax(v))
                if v[i] > b1:
                    b1, b1_where = float(v[i]), {"kappa": k, "alpha": a, "x": float(x[i])}
            prev = cur
    b2 = -np.inf
    if d is None or e is None:
        b2 = np.inf
    else:
        for k in kappas:
            for a in seq:
                x = np.linspace(-d * a / k, d * a / k, n)
                v = np.abs(_arr(family.evaluate(a, k, x))) - e * k / np.sqrt(a) * np.abs(x)
                b2 = max(b2, float(np.max(v - slack * np.abs(x))))
    parts = {"B1": {**_part(b1), "at": b1_where}, "B2": _part(b2)}
    return AssumptionReport(
        "B",
        {"d": d, "e": e},
        {"kappas": kappas, "alphas": seq, "points": n, "B1_grid": "[-10,10] plus log-spaced |x| in [1e-4, 10], also kappa-scaled"},
        max(b1, b2),
        parts,
    )


def check_assumption_C(
    family: ScalarFilterFamily,
    kappas=DEFAULT_KAPPAS,
    alphas=DEFAULT_ALPHAS,
    gamma: float | None = None,
    ell: Callable | None = None,
    n: int = 201,
    c_points: int = 64,
    rel_tol: float = 1e-9,
) -> AssumptionReport:
    """C1 via empirical Lipschitz constants; C2 by searching the smallest passing ``C``."""
    kappas = list(kappas)
    gamma = family.constant("gamma") if gamma is None else gamma
    if gamma is None or not gamma > 0 or gamma * max(kappas) ** 2 >= 1:
        raise ValueError(f"gamma={gamma} must lie in (0, 1/max kappa^2)")
    if ell is None:
        ell = (lambda a: family.ell(a)) if family.ell_rule else ELL_RULES["linear"]
    c1 = -np.inf
    c2 = -np.inf
    best_C = {}
    for k in kappas:
        g = gamma * k * k
        x = np.union1d(c_grid(k, n), c_grid(k, n, scaled=True))
        nz = x[x != 0]
        for a in alphas:
            if a > family.alpha_max:
                continue
            l_a = float(ell(a))
            fn = lambda t: family.evaluate(a, k, t)
            bound = g * l_a / (1 - l_a * (1 - g))
            lip = empirical_lipschitz(fn, x)
            c1 = max(c1, lip - bound * (1 + rel_tol))
            ratio = float(np.min(np.abs(_arr(fn(nz))) / np.abs(nz)))
            # C ranges over [1, 1/(1 - l)); the bound vanishes at the open end
            Cs = np.geomspace(1.0, 1.0 / (1.0 - l_a), c_points + 1)[:-1]
            t = 1 - Cs * (1 - l_a)
            lower = g * t / (1 - t * (1 - g))
            ok = ratio >= lower * (1 - rel_tol)
            if np.any(ok):
                best_C[(k, a)] = float(Cs[np.argmax(ok)])
                c2 = max(c2, -1.0)
            else:
                c2 = max(c2, float(lower[-1] - ratio))
    parts = {
        "C1": _part(c1),
        "C2": {**_part(c2), "max_smallest_C": max(best_C.values()) if best_C else None},
    }
    return AssumptionReport(
        "C",
        {"gamma": gamma, "ell_rule": family.ell_rule or "linear"},
        {"kappas": kappas, "alphas": list(alphas), "points": n, "C_grid": f"{c_points} log-spaced values in [1, 1/(1-ell))"},
        max(c1, c2),
        parts,
    )
