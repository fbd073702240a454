"""Composite numeric suites shared by the CLI and the test-suite."""

from __future__ import annotations

import time

import numpy as np

from .filters import DEFAULT_KAPPAS, ScalarFilterFamily
from .frame_core import dfd_diagonal
from .lemmas import check_inv_conv, check_prox_scaled, check_r_estimate
from .pnp import (
    PnPProblem,
    denoiser_from_filter,
    diagonal_pnp_reduce,
    empirical_denoiser_lipschitz,
    pnp_fixed_point,
)
from .reconstruction import ConvergenceError, Reconstructor, filtered_coefficients, fixed_point_oracle, variational_oracle

LEMMA_IDS = ("2.3", "2.4", "2.5", "3.3", "5.2")


def random_diagonal_data(rng, n: int = 50, kappa_range=(1e-3, 1.0)):
    """Log-uniform ``kappa``, data ``z = kappa x + noise`` and a log-uniform ``alpha``."""
    lo, hi = np.log10(kappa_range[0]), np.log10(kappa_range[1])
    k = 10.0 ** rng.uniform(lo, hi, n)
    k[0] = kappa_range[1]
    x = rng.standard_normal(n) * (rng.random(n) < 0.3)
    z = k * x + 0.05 * rng.standard_normal(n)
    alpha = float(10.0 ** rng.uniform(-3, 0))
    return k, z, alpha


def triple_agreement(family: ScalarFilterFamily, problems: int = 20, n: int = 50, kappa_range=(1e-3, 1.0), seed: int = 0) -> dict:
    """Largest discrepancy among the filtered DFD and the two independent oracles."""
    rng = np.random.default_rng(seed)
    worst, per = 0.0, []
    t0 = time.perf_counter()
    for _ in range(problems):
        k, z, a = random_diagonal_data(rng, n, kappa_range)
        r = Reconstructor(dfd_diagonal(k), family)
        direct = filtered_coefficients(r, a, z)
        var = variational_oracle(r, a, z)
        fp = fixed_point_oracle(r, a, z)
        scale = np.maximum(1.0, np.abs(direct))
        d = float(max(np.max(np.abs(direct - var) / scale), np.max(np.abs(direct - fp) / scale), np.max(np.abs(var - fp) / scale)))
        per.append({"alpha": a, "discrepancy": d})
        worst = max(worst, d)
    return {
        "lemma": "3.3",
        "family": family.name,
        "problems": problems,
        "n": n,
        "kappa_range": list(kappa_range),
        "max_discrepancy": worst,
        "tol": 1e-6,
        "pass": worst < 1e-6,
        "runtime_s": time.perf_counter() - t0,
        "details": per,
    }


def lemma_inv_conv(family: ScalarFilterFamily, kappa: float = 1.0, tol: float = 1e-6) -> dict:
    x = np.linspace(-5.0, 5.0, 101)
    sched = [2.0**-k for k in range(0, 31, 2)]
    pre = None
    if family.inverse_fn is not None:
        pre = lambda a: (lambda y: family.preimage(a, kappa, y))
    rep = check_inv_conv(lambda a: (lambda c: family.evaluate(a, kappa, c)), x, sched, tol, pre)
    out = rep.to_dict()
    out["details"] = {"trace": out["details"]["trace"]}
    out["family"] = family.name
    return out


def lemma_r_estimate(family: ScalarFilterFamily, kappas=DEFAULT_KAPPAS, alphas=(1.0, 0.25, 2.0**-4)) -> dict:
    """Lower bounds on ``s_1`` for stationary families with constants ``b`` and ``c``."""
    b, c = family.constant("b", max(kappas)), family.constant("c", max(kappas))
    if b is None or c is None or not family.has_penalty:
        raise ValueError(f"family {family.name!r} carries no (b, c) constants with an analytic penalty")
    reports = []
    for k in kappas:
        pen = family.analytic_penalty(1.0, k)
        for a in alphas:
            reports.append(check_r_estimate(pen, k, a, b, c).to_dict())
    return _merge("2.4", family.name, reports)


def lemma_prox_scaled(family: ScalarFilterFamily, kappas=DEFAULT_KAPPAS, alphas=(1.0, 0.5, 0.25, 2.0**-4)) -> dict:
    gamma = family.constant("gamma", max(kappas))
    if gamma is None or family.ell_rule is None:
        raise ValueError(f"family {family.name!r} carries no gamma and ell rule")
    reports = []
    for k in kappas:
        for a in alphas:
            pen = family.analytic_penalty(a, k)
            reports.append(check_prox_scaled(pen, a, gamma, k, float(family.ell(a))).to_dict())
    return _merge("2.5", family.name, reports)


def _merge(lemma, name, reports) -> dict:
    return {
        "lemma": lemma,
        "family": name,
        "hypothesis_ok": all(r["hypothesis_ok"] for r in reports),
        "grid": {"cases": len(reports), "per_case": reports[0]["grid"] if reports else {}},
        "worst_violation": max(r["worst_violation"] for r in reports),
        "pass": all(r["pass"] for r in reports),
        "details": reports,
    }


def pnp_uniqueness(family: ScalarFilterFamily, alphas=(1.0, 0.5, 0.25), n: int = 30, starts: int = 5, seed: int = 0, gamma: float = 0.9) -> dict:
    """Fixed points from several starts coincide and match the filtered DFD."""
    rng = np.random.default_rng(seed)
    k = rng.uniform(0.5, 1.0, n)
    k[0] = 1.0
    z = k * rng.standard_normal(n)
    dfd = dfd_diagonal(k)
    d = denoiser_from_filter(family, dfd, gamma)
    p = PnPProblem(k, z, gamma)
    rows = []
    ok = True
    for a in alphas:
        try:
            xs = [pnp_fixed_point(p, d, a, x0=None if i == 0 else 3 * rng.standard_normal(n)) for i in range(starts)]
        except ConvergenceError as exc:
            rows.append({"alpha": a, "error": str(exc)})
            ok = False
            continue
        spread = float(max(np.max(np.abs(x - xs[0])) for x in xs))
        ref = filtered_coefficients(Reconstructor(dfd, family, gamma), a, z)
        gap = float(np.max(np.abs(xs[0] - ref)))
        rows.append({"alpha": a, "spread": spread, "filter_gap": gap})
        ok &= spread < 1e-8 and gap < 1e-8
    return {"lemma": "5.2", "family": family.name, "starts": starts, "tol": 1e-8, "pass": bool(ok), "details": rows}


def pnp_suite(family: ScalarFilterFamily, alphas=(1.0, 0.5, 0.25, 2.0**-4), pairs: int = 10_000, seed: int = 0, gamma: float = 0.9) -> dict:
    """Contraction, uniqueness, filter equivalence and the reduce/build round trip."""
    rng = np.random.default_rng(seed)
    n = 30
    k = rng.uniform(0.5, 1.0, n)
    k[0] = 1.0
    dfd = dfd_diagonal(k)
    d = denoiser_from_filter(family, dfd, gamma)
    lip = []
    for a in alphas:
        X = 5 * rng.standard_normal((2 * pairs, n))
        measured = empirical_denoiser_lipschitz(d, a, X)
        bound = d.lipschitz_bound(a) if d.lipschitz_bound else None
        lip.append({"alpha": a, "measured": measured, "bound": bound, "pass": bound is None or measured <= bound + 1e-9})
    uniq = pnp_uniqueness(family, alphas, n=n, seed=seed + 1, gamma=gamma)
    red = diagonal_pnp_reduce(d.component, dfd, gamma)
    c = np.linspace(-5, 5, 101)
    rt = max(float(np.max(np.abs(red(a, kk, c) - family(a, kk, c)))) for a in alphas for kk in k[:10])
    return {
        "family": family.name,
        "lipschitz": lip,
        "uniqueness": uniq,
        "round_trip_max": rt,
        "pass": all(r["pass"] for r in lip) and uniq["pass"] and rt < 1e-8,
    }


def run_lemma(which: str, family: ScalarFilterFamily) -> dict:
    if which == "2.3":
        return lemma_inv_conv(family)
    if which == "2.4":
        return lemma_r_estimate(family)
    if which == "2.5":
        return lemma_prox_scaled(family)
    if which == "3.3":
        return triple_agreement(family)
    if which == "5.2":
        return pnp_uniqueness(family)
    raise ValueError(f"unknown lemma id {which!r}; choose from {', '.join(LEMMA_IDS)}")
