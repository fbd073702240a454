"""Command-line front end.

Exit codes: 0 success, 1 a requested check failed, 2 usage, configuration
or I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .filters import (
    FAMILY_NAMES,
    check_assumption_A,
    check_assumption_B,
    check_assumption_C,
    check_filter_axioms,
    make_family,
)
from .frame_core import DimensionError
from .harness import ConfigError, load_config, run_rates, write_rate_table
from .io import dumps, read_vector, write_vector
from .pnp import denoiser_from_filter, measure_admissibility, pnp_convergence_run
from .problems import NoiseModel, add_noise, make_problem
from .reconstruction import ConvergenceError, Reconstructor, reconstruct
from .suites import LEMMA_IDS, run_lemma

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _family_args(p: argparse.ArgumentParser, default: str | None = None) -> None:
    p.add_argument("--family", default=default, required=default is None, help=f"one of: {', '.join(FAMILY_NAMES)}")
    p.add_argument("--b", type=float, help="curvature constant of the Huber families")
    p.add_argument("--d", type=float, help="knot constant of the Huber families")
    p.add_argument("--gamma", type=float, help="step size of the staircase family")
    p.add_argument("--kappa-max", type=float, help="largest quasi-singular value the family must support")
    p.add_argument("--ell-rule", choices=("linear", "sqrt"), help="contraction rule of the staircase family")


def _build_family(a):
    try:
        return make_family(a.family, b=a.b, d=a.d, gamma=a.gamma, kappa_max=a.kappa_max, ell_rule=a.ell_rule)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", choices=("diagonal", "matrix", "radon"), default="diagonal")
    p.add_argument("--n", type=int, default=64, help="size of diagonal problems")
    p.add_argument("--kappa-min", type=float, default=0.05)
    p.add_argument("--sparsity", type=float, default=0.9)
    p.add_argument("--rows", type=int, default=20)
    p.add_argument("--cols", type=int, default=20)
    p.add_argument("--condition", type=float, default=100.0)
    p.add_argument("--size", type=int, default=32, help="image side of Radon problems")
    p.add_argument("--angles", type=int, default=48)
    p.add_argument("--phantom", default="blocks")


def _build_problem(a):
    if a.problem == "diagonal":
        spec = {"kind": "diagonal", "n": a.n, "kappa_min": a.kappa_min, "sparsity": a.sparsity, "seed": a.seed}
    elif a.problem == "matrix":
        spec = {"kind": "matrix", "rows": a.rows, "cols": a.cols, "condition": a.condition, "seed": a.seed}
    else:
        spec = {"kind": "radon", "size": a.size, "n_angles": a.angles, "phantom": a.phantom}
    try:
        return make_problem(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(a, report: dict, text: str) -> None:
    print(dumps(report) if a.json else text)


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# ---------------------------------------------------------------------------
# Subcommands


def cmd_verify_filter(a) -> int:
    fam = _build_family(a)
    checks = [c.upper() for c in (a.check or ["F"])]
    report = {"family": fam.name, "params": fam.params, "checks": {}}
    kmax = a.kappa_max or 1.0
    ks = tuple(kmax * 2.0**-j for j in range(7))
    try:
        for c in checks:
            if c == "F":
                r = check_filter_axioms(fam, kappas=ks, n=a.grid)
            elif c == "A":
                r = check_assumption_A(fam, kappas=ks, b=a.b, c=a.c).to_dict()
            elif c == "B":
                d = fam.constant("d", kmax) if a.b_d is None else a.b_d
                e = fam.constant("e", kmax) if a.b_e is None else a.b_e
                r = check_assumption_B(fam, kappas=ks, d=d, e=e, n=a.grid).to_dict()
            elif c == "C":
                r = check_assumption_C(fam, kappas=ks, gamma=a.gamma or fam.constant("gamma", kmax), n=a.grid).to_dict()
            else:
                raise UsageError(f"unknown check {c!r}; choose from F, A, B, C")
            report["checks"][c] = r
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ok = all(r["pass"] for r in report["checks"].values())
    report["pass"] = ok
    lines = [f"{fam.name}:"]
    for c, r in report["checks"].items():
        parts = r.get("parts", {})
        failed = [k for k, v in parts.items() if isinstance(v, dict) and not v.get("pass", True)]
        lines.append(f"  {c}: {_status(r['pass'])}" + (f" (failed: {', '.join(failed)})" if failed else ""))
    _emit(a, report, "\n".join(lines))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_reconstruct(a) -> int:
    fam = _build_family(a)
    prob = _build_problem(a)
    if a.input:
        try:
            y = read_vector(a.input)
        except OSError as exc:
            raise UsageError(f"{a.input}: {exc.strerror}") from exc
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        truth_known = False
    else:
        y = add_noise(prob, NoiseModel(a.noise, a.seed))
        truth_known = True
    r = Reconstructor(prob.dfd, fam)
    try:
        res = reconstruct(r, a.alpha, y)
    except DimensionError as exc:
        raise UsageError(str(exc)) from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    summary = {"family": fam.name, "alpha": a.alpha, "noise": a.noise, "problem": prob.meta, **res.summary()}
    if truth_known:
        err = float(np.linalg.norm(res.x - prob.x_true))
        summary["l2_error"] = err
        summary["relative_error"] = err / max(float(np.linalg.norm(prob.x_true)), np.finfo(float).tiny)
    if a.output:
        out = Path(a.output)
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_vector(out / "x.csv", res.x)
            write_vector(out / "coefficients.csv", res.coefficients)
            (out / "summary.json").write_text(dumps(summary) + "\n")
        except OSError as exc:
            raise UsageError(f"{out}: {exc.strerror}") from exc
    text = f"{fam.name} alpha={a.alpha}: |x|={summary['x_norm']:.6g}"
    if "l2_error" in summary:
        text += f" l2_error={summary['l2_error']:.6g} relative={summary['relative_error']:.3e}"
    _emit(a, summary, text)
    return EXIT_OK


def cmd_rates(a) -> int:
    try:
        exp = load_config(a.config)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    try:
        table = run_rates(exp, threads=a.threads, timing=not a.no_timing)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(a.out)
    try:
        write_rate_table(table, out, a.meta, timing=not a.no_timing)
    except OSError as exc:
        raise UsageError(f"{out}: {exc.strerror}") from exc
    failed = sum(1 for r in table.rows if "failure" in r)
    report = {"rows": len(table.rows), "failed_rows": failed, "csv": str(out), "C": table.meta["C"], "aggregates": table.aggregates}
    lines = [f"{len(table.rows)} rows written to {out}"] + [
        f"  {g['filter']:<12} delta={g['delta']:<8g} mean={g['mean']:.6g} std={g['std']:.3g}" for g in table.aggregates
    ]
    _emit(a, report, "\n".join(lines))
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_pnp(a) -> int:
    fam = _build_family(a)
    a.problem = "diagonal"
    prob = _build_problem(a)
    if prob.dfd.max_kappa**2 * a.step >= 1:
        raise UsageError(f"--step {a.step} must satisfy step * max_kappa^2 < 1")
    try:
        d = denoiser_from_filter(fam, prob.dfd, a.step)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rng = np.random.default_rng(a.seed)
    alphas = [2.0**-k for k in range(0, 21, 2)]
    adm = measure_admissibility(d, alphas, rng.standard_normal((8, prob.dfd.kappa.size)), seed=a.seed)
    deltas = [2.0**-k for k in range(1, a.levels + 1)]
    try:
        rows = pnp_convergence_run(
            prob.dfd.kappa, prob.coefficients_true, d, a.step, deltas, ell_rule=fam.ell_rule or "linear", seed=a.seed
        )
    except ConvergenceError as exc:
        report = {"admissibility": adm, "error": str(exc), "pass": False}
        _emit(a, report, f"PnP iteration failed: {exc}")
        return EXIT_FAIL
    if a.out:
        import csv

        try:
            with open(a.out, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["delta", "alpha", "lipschitz", "iterations", "error"])
                for r in rows:
                    w.writerow([repr(r["delta"]), repr(r["alpha"]), repr(r["lipschitz"]), r["iterations"], repr(r["error"])])
        except OSError as exc:
            raise UsageError(f"{a.out}: {exc.strerror}") from exc
    report = {"family": fam.name, "gamma": a.step, "admissibility": adm, "convergence": rows, "pass": adm["pass"]}
    lines = [f"{fam.name}: admissibility " + ", ".join(f"{k} {_status(adm[k]['pass'])}" for k in ("D1", "D2", "D3", "D4"))]
    lines += [f"  delta={r['delta']:<10g} alpha={r['alpha']:<10g} iterations={r['iterations']:<6d} error={r['error']:.4g}" for r in rows]
    _emit(a, report, "\n".join(lines))
    return EXIT_OK if adm["pass"] else EXIT_FAIL


def cmd_check_lemmas(a) -> int:
    fam = _build_family(a)
    try:
        rep = run_lemma(a.which, fam)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(a, rep, f"lemma {a.which} on {fam.name}: {_status(rep['pass'])}")
    return EXIT_OK if rep["pass"] else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a machine-readable JSON report")
    common.add_argument("--seed", type=int, default=0, help="seed for every random draw")
    common.add_argument("--threads", type=int, default=1, help="worker threads for independent jobs")

    p = argparse.ArgumentParser(prog="nldfd", description="Non-linear filtered DFD toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify-filter", parents=[common], help="check filter axioms and assumptions")
    _family_args(v)
    v.add_argument("--check", action="append", help="F, A, B or C (repeatable; default F)")
    v.add_argument("--c", type=float, help="override the A2 constant c")
    v.add_argument("--b-d", type=float, help="override the B2 constant d")
    v.add_argument("--b-e", type=float, help="override the B2 constant e")
    v.add_argument("--grid", type=int, default=201, help="points per coefficient grid")
    v.set_defaults(func=cmd_verify_filter)

    r = sub.add_parser("reconstruct", parents=[common], help="reconstruct from data with a filtered DFD")
    _family_args(r)
    _problem_args(r)
    r.add_argument("--alpha", type=float, required=True)
    r.add_argument("--noise", type=float, default=0.0, help="relative noise level for generated data")
    r.add_argument("--input", help="CSV file with data y (default: generated from the problem)")
    r.add_argument("--output", help="directory for x.csv, coefficients.csv and summary.json")
    r.set_defaults(func=cmd_reconstruct)

    t = sub.add_parser("rates", parents=[common], help="run a convergence-rate experiment")
    t.add_argument("--config", required=True, help="TOML or JSON experiment file")
    t.add_argument("--out", required=True, help="CSV output path")
    t.add_argument("--meta", help="metadata JSON path (default: CSV path with .json suffix)")
    t.add_argument("--no-timing", action="store_true", help="write zero runtimes for bitwise-reproducible output")
    t.set_defaults(func=cmd_rates)

    q = sub.add_parser("pnp", parents=[common], help="admissibility and convergence of a PnP denoiser")
    _family_args(q, default="pnp-c")
    _problem_args(q)
    q.set_defaults(kappa_min=0.5, n=32)
    q.add_argument("--step", type=float, default=0.9, help="PnP step size gamma")
    q.add_argument("--levels", type=int, default=8, help="noise levels 2^-1 .. 2^-levels")
    q.add_argument("--out", help="CSV path for the convergence table")
    q.set_defaults(func=cmd_pnp)

    c = sub.add_parser("check-lemmas", parents=[common], help="run a numeric lemma suite")
    c.add_argument("--which", required=True, help=f"one of: {', '.join(LEMMA_IDS)}")
    _family_args(c)
    c.set_defaults(func=cmd_check_lemmas)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    if getattr(a, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    try:
        return a.func(a)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
