"""Experiment orchestration: rate tables, stability and convergence sweeps."""

from __future__ import annotations

import csv
import json
import math
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .filters import ScalarFilterFamily, make_family
from .problems import InverseProblem, NoiseModel, add_noise, make_problem
from .reconstruction import Reconstructor, reconstruct, stability_bound

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

CSV_HEADER = ("filter", "delta", "alpha", "seed", "l2_error", "runtime_ms")
AUTO_C_GRID = tuple(float(c) for c in np.geomspace(0.1, 1000.0, 10))
RULES = ("linear", "sqrt-compatible", "custom")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field or line."""


# ---------------------------------------------------------------------------
# Experiment description


@dataclass(frozen=True)
class FilterSpec:
    name: str
    params: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}[{inner}]"

    def build(self) -> ScalarFilterFamily:
        return make_family(self.name, **self.params)

    @classmethod
    def parse(cls, obj) -> "FilterSpec":
        if isinstance(obj, str):
            return cls(obj)
        if isinstance(obj, dict) and "name" in obj:
            params = {k: v for k, v in obj.items() if k != "name"}
            return cls(str(obj["name"]), params)
        raise ConfigError(f"filters: entry {obj!r} must be a name or a table with a 'name' key")


@dataclass(frozen=True)
class RateExperiment:
    """One rate study.

    ``rule`` is ``linear`` or ``sqrt-compatible`` (both ``alpha = C delta``)
    or ``custom`` (``alpha_table`` maps each delta to alpha).  ``C`` may be a
    number, a per-filter mapping, or ``"auto"``.  ``alpha_floor`` keeps
    ``alpha`` positive on exact data rows.
    """

    problem: dict
    filters: tuple
    deltas: tuple
    seeds: tuple
    rule: str = "linear"
    C: object = "auto"
    c_grid: tuple = AUTO_C_GRID
    holdout_seed: int | None = None
    alpha_table: dict | None = None
    alpha_floor: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(FilterSpec.parse(f) for f in self.filters))
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.filters:
            raise ConfigError("filters: at least one filter is required")
        if not self.deltas:
            raise ConfigError("deltas: at least one noise level is required")
        if any(d < 0 for d in self.deltas) or any(b <= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ConfigError("deltas: must be nonnegative and strictly increasing")
        if not self.seeds:
            raise ConfigError("seeds: must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds: duplicates are not allowed")
        if self.rule not in RULES:
            raise ConfigError(f"rule: unknown rule {self.rule!r}; choose from {', '.join(RULES)}")
        if self.rule == "custom":
            if not self.alpha_table:
                raise ConfigError("alpha_table: required for rule 'custom'")
            table = {float(k): float(v) for k, v in self.alpha_table.items()}
            missing = [d for d in self.deltas if d not in table]
            if missing:
                raise ConfigError(f"alpha_table: no alpha for delta {missing[0]}")
            object.__setattr__(self, "alpha_table", table)
        else:
            self._check_c(self.C)
        if self.alpha_floor < 0:
            raise ConfigError("alpha_floor: must be nonnegative")
        if not self.c_grid or any(c <= 0 for c in self.c_grid):
            raise ConfigError("c_grid: must be a nonempty list of positive numbers")
        if self.holdout_seed is not None and self.holdout_seed in self.seeds:
            raise ConfigError("holdout_seed: must differ from the evaluation seeds")

    def _check_c(self, C):
        if C == "auto":
            return
        if isinstance(C, dict):
            labels = {f.label for f in self.filters} | {f.name for f in self.filters}
            for k, v in C.items():
                if k not in labels:
                    raise ConfigError(f"C: key {k!r} matches no filter")
                self._check_c(v)
            return
        if not (isinstance(C, (int, float)) and not isinstance(C, bool) and C > 0):
            raise ConfigError(f"C: expected a positive number or 'auto', got {C!r}")

    @property
    def heldout(self) -> int:
        return self.holdout_seed if self.holdout_seed is not None else max(self.seeds) + 1

    def c_for(self, spec: FilterSpec):
        C = self.C
        if isinstance(C, dict):
            C = C.get(spec.label, C.get(spec.name, "auto"))
        return C

    def alpha(self, delta: float, C: float) -> float:
        """The parameter rule; ``delta^2 / alpha = delta / C -> 0`` for the built-in rules."""
        if self.rule == "custom":
            return self.alpha_table[delta]
        return max(C * delta, self.alpha_floor)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filters"] = [{"name": f.name, **f.params} for f in self.filters]
        return d


_FIELDS = {"problem", "filters", "deltas", "seeds", "rule", "C", "c_grid", "holdout_seed", "alpha_table", "alpha_floor"}


def experiment_from_mapping(cfg: dict) -> RateExperiment:
    unknown = sorted(set(cfg) - _FIELDS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field")
    for key in ("problem", "filters", "deltas", "seeds"):
        if key not in cfg:
            raise ConfigError(f"{key}: missing required field")
    if not isinstance(cfg["problem"], dict):
        raise ConfigError("problem: must be a table")
    for key in ("filters", "deltas", "seeds"):
        if not isinstance(cfg[key], list):
            raise ConfigError(f"{key}: must be a list")
    kw = dict(cfg)
    for key in ("filters", "deltas", "seeds", "c_grid"):
        if key in kw:
            kw[key] = tuple(kw[key])
    try:
        return RateExperiment(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value: {exc}") from exc


def load_config(path) -> RateExperiment:
    """Read a TOML or JSON experiment file (chosen by suffix, JSON for ``.json``)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    if path.suffix.lower() == ".json":
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    else:
        try:
            cfg = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            line = getattr(exc, "lineno", None)
            if line is None:
                m = re.search(r"line (\d+)", str(exc))
                line = int(m.group(1)) if m else text.count("\n") + 1
            raise ConfigError(f"{path}: line {line}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a table")
    return experiment_from_mapping(cfg)


# ---------------------------------------------------------------------------
# Rates


@dataclass
class RateTable:
    rows: list
    aggregates: list
    meta: dict = field(default_factory=dict)

    def errors(self, filter_label: str, delta: float) -> np.ndarray:
        return np.array([r["l2_error"] for r in self.rows if r["filter"] == filter_label and r["delta"] == delta])

    def mean(self, filter_label: str, delta: float) -> float:
        for a in self.aggregates:
            if a["filter"] == filter_label and a["delta"] == delta:
                return a["mean"]
        raise KeyError((filter_label, delta))


def aggregate(rows) -> list[dict]:
    """Mean and population std of finite errors per (filter, delta)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["filter"], r["delta"]), []).append(r["l2_error"])
    out = []
    for (f, d), errs in sorted(groups.items()):
        e = np.array([x for x in errs if np.isfinite(x)])
        out.append(
            {
                "filter": f,
                "delta": d,
                "count": int(e.size),
                "failed": len(errs) - int(e.size),
                "mean": float(e.mean()) if e.size else math.nan,
                "std": float(e.std()) if e.size else math.nan,
            }
        )
    return out


def _error(problem: InverseProblem, r: Reconstructor, delta: float, alpha: float, seed: int) -> float:
    y = add_noise(problem, NoiseModel(delta, seed))
    return float(np.linalg.norm(reconstruct(r, alpha, y).x - problem.x_true))


def _select_c(exp: RateExperiment, problem, r: Reconstructor) -> tuple[float, list]:
    scores = []
    for C in exp.c_grid:
        errs = []
        for d in exp.deltas:
            try:
                errs.append(_error(problem, r, d, exp.alpha(d, C), exp.heldout))
            except (ValueError, ArithmeticError):
                errs.append(math.inf)
        scores.append(float(np.mean(errs)))
    best = int(np.argmin(scores))
    return float(exp.c_grid[best]), scores


def _map(fn, jobs, threads: int):
    if threads <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


def run_rates(exp: RateExperiment, threads: int = 1, timing: bool = True, problem: InverseProblem | None = None) -> RateTable:
    """One row per (filter, delta, seed); failed rows carry ``l2_error = nan`` and a ``failure`` message."""
    problem = make_problem(exp.problem) if problem is None else problem
    recon = {f.label: Reconstructor(problem.dfd, f.build()) for f in exp.filters}
    chosen, scores = {}, {}
    for f in exp.filters:
        if exp.rule == "custom":
            chosen[f.label] = None
            continue
        C = exp.c_for(f)
        if C == "auto":
            C, scores[f.label] = _select_c(exp, problem, recon[f.label])
        chosen[f.label] = float(C)

    jobs = [(f.label, d, s) for f in exp.filters for d in exp.deltas for s in exp.seeds]

    def run(job):
        label, d, s = job
        a = exp.alpha(d, chosen[label])
        row = {"filter": label, "delta": d, "alpha": a, "seed": s}
        t0 = time.perf_counter()
        try:
            row["l2_error"] = _error(problem, recon[label], d, a, s)
        except (ValueError, ArithmeticError) as exc:
            row["l2_error"] = math.nan
            row["failure"] = str(exc)
        row["runtime_ms"] = (time.perf_counter() - t0) * 1e3 if timing else 0.0
        return row

    rows = sorted(_map(run, jobs, threads), key=lambda r: (r["filter"], r["delta"], r["seed"]))
    meta = {
        "config": exp.to_dict(),
        "version": __version__,
        "problem_meta": {k: v for k, v in problem.meta.items() if isinstance(v, (int, float, str, bool))},
        "C": chosen,
        "c_selection": {
            "protocol": "auto: minimize mean error over deltas on the held-out seed",
            "holdout_seed": exp.heldout,
            "grid": list(exp.c_grid),
            "scores": scores,
        },
        "timing": timing,
        "tolerances": {"aggregate_recompute": 1e-12},
    }
    return RateTable(rows, aggregate(rows), meta)


def write_rate_table(table: RateTable, csv_path, meta_path=None, timing: bool = True) -> None:
    """CSV rows (exact float repr) plus a JSON metadata file with aggregates."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in table.rows:
            rt = r["runtime_ms"] if timing else 0.0
            w.writerow([r["filter"], repr(r["delta"]), repr(r["alpha"]), r["seed"], repr(r["l2_error"]), repr(rt)])
    meta_path = Path(meta_path) if meta_path is not None else csv_path.with_suffix(".json")
    payload = {**table.meta, "aggregates": table.aggregates}
    failures = [r for r in table.rows if "failure" in r]
    if failures:
        payload["failures"] = failures
    meta_path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def read_rate_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("delta", "alpha", "l2_error", "runtime_ms"):
            r[k] = float(r[k])
        r["seed"] = int(r["seed"])
    return rows


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# ---------------------------------------------------------------------------
# Sweeps


def run_stability_sweep(
    problem: InverseProblem,
    family: ScalarFilterFamily,
    alpha: float,
    perturbation_schedule,
    delta: float = 0.0,
    seed: int = 0,
    floor: float = 1e-12,
) -> dict:
    """Output differences ``|B(y + z_k) - B(y)|`` for perturbations of norm ``eps_k``.

    Each ``z_k`` is a fixed random direction scaled to the scheduled norm.
    ``pass`` requires the differences to be nonincreasing up to ``floor``
    and every ratio to stay below the bound computed for the largest
    perturbation (when the family carries the B2 constants).
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    r = Reconstructor(problem.dfd, family)
    y = add_noise(problem, NoiseModel(delta, seed))
    base = reconstruct(r, alpha, y).x
    direction = np.random.default_rng([seed, 1]).standard_normal(y.shape)
    direction /= np.linalg.norm(direction)
    eps = [float(e) for e in perturbation_schedule]
    try:
        bound = stability_bound(r, alpha, y, max(eps, default=0.0))
    except ValueError:
        bound = None
    rows = []
    for e in eps:
        diff = float(np.linalg.norm(reconstruct(r, alpha, y + e * direction).x - base))
        ratio = diff / e if e > 0 else 0.0
        rows.append({"perturbation": e, "output_diff": diff, "ratio": ratio, "bound": bound})
    diffs = [row["output_diff"] for row in rows]
    monotone = all(b <= a + floor for a, b in zip(diffs, diffs[1:]))
    bounded = bound is None or all(row["ratio"] <= bound for row in rows)
    return {"family": family.name, "alpha": alpha, "rows": rows, "monotone": monotone, "bounded": bounded, "pass": monotone and bounded}


def run_convergence_sweep(
    problem: InverseProblem,
    family: ScalarFilterFamily,
    C: float = 1.0,
    ks=range(1, 13),
    seeds=range(10),
    threshold: float | None = None,
    rule: str = "linear",
) -> dict:
    """Relative errors along ``delta_k = 2^-k`` with ``alpha_k = C delta_k``.

    Each row holds the mean and std over seeds of the noisy relative error and
    the exact-data (``delta = 0``) error at the same ``alpha_k``.  ``threshold``
    defaults to 1e-2 for diagonal problems and 5e-2 otherwise.
    """
    if rule not in ("linear", "sqrt-compatible"):
        raise ValueError(f"unknown rule {rule!r}")
    if threshold is None:
        threshold = 1e-2 if problem.meta.get("kind") == "diagonal" else 5e-2
    r = Reconstructor(problem.dfd, family)
    xn = float(np.linalg.norm(problem.x_true)) or 1.0
    rows = []
    for k in ks:
        d = 2.0 ** -k
        a = C * d
        errs = np.array([_error(problem, r, d, a, s) for s in seeds]) / xn
        exact = _error(problem, r, 0.0, a, 0) / xn
        rows.append({"k": k, "delta": d, "alpha": a, "mean_error": float(errs.mean()), "std_error": float(errs.std()), "exact_error": exact})
    means = np.array([row["mean_error"] for row in rows])
    pooled = float(np.sqrt(np.mean([row["std_error"] ** 2 for row in rows])))
    decreasing = bool(np.all(np.diff(means) <= pooled))
    final_ok = bool(means[-1] < threshold)
    return {
        "family": family.name,
        "C": C,
        "rows": rows,
        "pooled_std": pooled,
        "decreasing": decreasing,
        "final_error": float(means[-1]),
        "threshold": threshold,
        "pass": decreasing and final_ok,
    }
