"""Numeric checkers for the scalar prox lemmas.

Every checker returns a :class:`LemmaReport` and never raises on a failed
inequality, so callers can surface hypothesis failures as data.  Inequalities
are verified on sampled grids; reports record the grid resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .prox_calculus import ScalarPenalty, preimage_bounds, prox


@dataclass
class LemmaReport:
    lemma: str
    hypothesis_ok: bool
    grid: dict
    worst_violation: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "hypothesis_ok": self.hypothesis_ok,
            "grid": self.grid,
            "worst_violation": self.worst_violation,
            "pass": self.passed,
            "details": self.details,
        }


def _grid_info(g) -> dict:
    g = np.asarray(g, dtype=float)
    step = float(np.min(np.diff(np.unique(g)))) if g.size > 1 else 0.0
    return {"points": int(g.size), "min": float(g.min()), "max": float(g.max()), "min_step": step}


def _max(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.max(v)) if v.size else -np.inf


def inverse_errors(p: Callable, x, preimage: Callable | None = None):
    """``e1 = |p(x) - x|`` and ``e2 = sup_{y in p^{-1}(x)} |y - x|`` (``inf`` if empty).

    ``preimage(x)`` may supply ``(lo, hi, empty, clamped)`` in closed form.
    """
    x = np.asarray(x, dtype=float)
    e1 = np.abs(np.asarray(p(x), dtype=float) - x)
    lo, hi, empty, clamped = (preimage or (lambda v: preimage_bounds(p, v)))(x)
    with np.errstate(invalid="ignore"):
        e2 = np.maximum(np.abs(lo - x), np.abs(hi - x))
    e2 = np.where(empty | clamped, np.inf, e2)
    return e1, e2


def check_inv_conv(
    family: Callable[[float], Callable] | Mapping,
    x_grid,
    alpha_schedule,
    tol: float = 1e-6,
    preimage: Callable | None = None,
) -> LemmaReport:
    """Filters converge to the identity iff their preimages shrink to points.

    ``family`` maps ``alpha`` to a monotone nonexpansive map fixing 0.  Along
    the decreasing schedule both ``e1`` and ``e2`` are recorded; the check
    passes when, at the final ``alpha``, each grid point has both errors
    below ``tol`` or neither.  ``preimage(alpha)`` optionally returns a
    closed-form preimage map for the member at ``alpha``.
    """
    get = family.__getitem__ if isinstance(family, Mapping) else family
    x = np.asarray(x_grid, dtype=float)
    alphas = list(alpha_schedule)
    trace = []
    for a in alphas:
        e1, e2 = inverse_errors(get(a), x, None if preimage is None else preimage(a))
        trace.append({"alpha": a, "e1_max": float(e1.max()), "e2_max": float(e2.max())})
    mismatch = (e1 < tol) != (e2 < tol)
    both = np.maximum(e1, e2) - tol
    v = np.where(mismatch, both, np.minimum(both, 0.0))
    worst = _max(v)
    return LemmaReport(
        "2.3",
        True,
        {**_grid_info(x), "alphas": alphas, "tol": tol},
        worst,
        not bool(np.any(mismatch)),
        {"trace": trace, "e1_final": e1.tolist(), "e2_final": np.where(np.isinf(e2), None, e2).tolist()},
    )


def check_r_estimate(
    penalty: ScalarPenalty,
    kappa: float,
    alpha: float,
    b: float,
    c: float,
    y_grid=None,
    x_points: int = 2001,
    slack: float = 1e-10,
) -> LemmaReport:
    """Quadratic/linear lower bounds on ``s`` from a shrinkage bound on ``prox_{alpha s}``.

    Hypothesis (sampled on ``x_points``): ``|prox_{alpha s}(x)| <= kappa^2 /
    (kappa^2 + alpha b) |x|`` whenever ``|x| <= min prox_{alpha s}^{-1}(c kappa)``.
    Conclusions: ``s(y) >= (b/2)(y/kappa)^2`` for ``|y| <= c kappa`` and
    ``s(y) >= b c |y/kappa| - b c^2 / 2`` beyond.
    """
    s_a = penalty.scaled(alpha)
    p = lambda x: prox(s_a, x)
    lo, _, empty, _ = preimage_bounds(p, c * kappa)
    if bool(empty):
        hyp_ok, hyp_worst, xmax = False, np.inf, 0.0
    else:
        xmax = float(lo)
        xs = np.linspace(-xmax, xmax, x_points)
        h = np.abs(np.asarray(p(xs), dtype=float)) - kappa**2 / (kappa**2 + alpha * b) * np.abs(xs)
        hyp_worst = _max(h - slack)
        hyp_ok = hyp_worst <= 0
    if y_grid is None:
        y_grid = np.union1d(np.linspace(-10, 10, 201), c * kappa * np.linspace(-10, 10, 201))
    y = np.asarray(y_grid, dtype=float)
    sy = np.asarray(penalty(y), dtype=float)
    inner = np.abs(y) <= c * kappa
    bound = np.where(inner, 0.5 * b * (y / kappa) ** 2, b * c * np.abs(y / kappa) - 0.5 * b * c * c)
    worst = _max(bound - sy - slack)
    grid = {"y": _grid_info(y), "x_hypothesis": {"points": x_points, "max_abs": xmax}}
    details = {"hypothesis_worst": hyp_worst, "kappa": kappa, "alpha": alpha, "b": b, "c": c}
    if not hyp_ok:
        details["message"] = "hypothesis fails"
    return LemmaReport("2.4", bool(hyp_ok), grid, worst, bool(hyp_ok and worst <= 0), details)


def check_prox_scaled(
    penalty: ScalarPenalty,
    alpha: float,
    gamma: float,
    kappa: float,
    t: float,
    x_grid=None,
    hyp_points: int = 2001,
    slack: float = 1e-10,
) -> LemmaReport:
    """Shrinkage of ``prox_s`` near 0 transfers to ``prox_{gamma s(kappa .)}``.

    Hypothesis: ``|prox_s(x)| <= gamma k^2 t / (1 - t (1 - gamma k^2)) |x|``
    for ``|x| <= alpha / kappa``.  Conclusions: ``|x| <= gamma alpha`` gives
    ``|prox_{gamma s(k .)}(x)| <= t |x|``, and ``|x| > gamma alpha`` gives
    ``|prox_{gamma s(k .)}(x) - x| > (1 - t) gamma alpha``.
    """
    g = gamma * kappa**2
    if not g < 1:
        raise ValueError(f"need gamma * kappa^2 < 1, got {g}")
    if not 0 <= t < 1:
        raise ValueError("t must lie in [0, 1)")
    m = g * t / (1 - t * (1 - g))
    xs = np.linspace(-alpha / kappa, alpha / kappa, hyp_points)
    hyp = np.abs(np.asarray(prox(penalty, xs), dtype=float)) - m * np.abs(xs)
    hyp_worst = _max(hyp - slack)
    hyp_ok = hyp_worst <= 0
    if x_grid is None:
        x_grid = np.union1d(np.linspace(-10, 10, 201), gamma * alpha * np.linspace(-10, 10, 201))
    x = np.asarray(x_grid, dtype=float)
    q = penalty.dilated(kappa).scaled(gamma)
    px = np.asarray(prox(q, x), dtype=float)
    inner = np.abs(x) <= gamma * alpha
    v1 = np.abs(px) - t * np.abs(x) - slack
    v2 = (1 - t) * gamma * alpha - np.abs(px - x) - slack
    worst = max(_max(v1[inner]), _max(v2[~inner]))
    details = {
        "hypothesis_worst": hyp_worst,
        "conclusion1_worst": _max(v1[inner]),
        "conclusion2_worst": _max(v2[~inner]),
        "slope_bound": m,
    }
    if not hyp_ok:
        details["message"] = "hypothesis fails"
    grid = {"x": _grid_info(x), "x_hypothesis": {"points": hyp_points, "max_abs": alpha / kappa}}
    return LemmaReport("2.5", bool(hyp_ok), grid, worst, bool(hyp_ok and worst <= 0), details)
