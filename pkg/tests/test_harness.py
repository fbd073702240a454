import json

import numpy as np
import pytest

from nldfd.filters import make_family
from nldfd.harness import (
    CSV_HEADER,
    ConfigError,
    RateExperiment,
    aggregate,
    experiment_from_mapping,
    load_config,
    read_rate_csv,
    run_convergence_sweep,
    run_rates,
    run_stability_sweep,
    write_rate_table,
)
from nldfd.problems import make_problem

DIAG = {"kind": "diagonal", "n": 32, "kappa_min": 0.1}


def small_experiment(**kw):
    base = dict(problem=DIAG, filters=["soft", "tikhonov"], deltas=[0.01, 0.05, 0.1], seeds=list(range(10)), C=1.0)
    base.update(kw)
    return RateExperiment(**base)


def test_experiment_validation():
    with pytest.raises(ConfigError, match="seeds"):
        small_experiment(seeds=[])
    with pytest.raises(ConfigError, match="deltas"):
        small_experiment(deltas=[0.1, 0.05])
    with pytest.raises(ConfigError, match="rule"):
        small_experiment(rule="quadratic")
    with pytest.raises(ConfigError, match="C"):
        small_experiment(C=-1.0)
    with pytest.raises(ConfigError, match="alpha_table"):
        small_experiment(rule="custom")
    with pytest.raises(ConfigError, match="holdout"):
        small_experiment(holdout_seed=3)


def test_rule_gives_vanishing_delta_squared_over_alpha():
    exp = small_experiment(C=2.0)
    ratios = [d * d / exp.alpha(d, 2.0) for d in (1e-1, 1e-2, 1e-3)]
    assert ratios == pytest.approx([d / 2.0 for d in (1e-1, 1e-2, 1e-3)])


def test_rows_and_aggregates():
    exp = small_experiment()
    t = run_rates(exp, timing=False)
    assert len(t.rows) == 2 * 3 * 10
    for r in t.rows:
        assert r["alpha"] == exp.alpha(r["delta"], 1.0)
    again = aggregate(t.rows)
    for a, b in zip(t.aggregates, again):
        assert a["mean"] == pytest.approx(b["mean"], abs=1e-12) and a["std"] == pytest.approx(b["std"], abs=1e-12)
    for f in ("soft", "tikhonov"):
        means = [t.mean(f, d) for d in exp.deltas]
        stds = [a["std"] for a in t.aggregates if a["filter"] == f]
        assert all(b >= a - s for a, b, s in zip(means, means[1:], stds))


def test_duplicate_seed_rows_are_identical():
    exp = small_experiment(seeds=[4], filters=["soft"])
    a = run_rates(exp, timing=False).rows
    b = run_rates(exp, timing=False).rows
    assert a == b


def test_threaded_run_is_identical():
    exp = small_experiment(seeds=[0, 1, 2])
    assert run_rates(exp, threads=4, timing=False).rows == run_rates(exp, timing=False).rows


def test_exact_data_row_has_positive_bias():
    exp = small_experiment(deltas=[0.0, 0.01], alpha_floor=1e-3, filters=["soft"], seeds=[0])
    t = run_rates(exp, timing=False)
    row = [r for r in t.rows if r["delta"] == 0.0][0]
    assert row["alpha"] == 1e-3 and row["l2_error"] > 0


def test_zero_alpha_row_is_marked_failed():
    exp = small_experiment(deltas=[0.0, 0.01], filters=["soft"], seeds=[0])
    t = run_rates(exp, timing=False)
    bad = [r for r in t.rows if r["delta"] == 0.0][0]
    assert np.isnan(bad["l2_error"]) and "failure" in bad


def test_auto_c_uses_heldout_seed():
    exp = small_experiment(C="auto", seeds=[0, 1])
    t = run_rates(exp, timing=False)
    sel = t.meta["c_selection"]
    assert sel["holdout_seed"] == 2 and len(sel["grid"]) == 10
    for f, C in t.meta["C"].items():
        assert C in sel["grid"]
        assert sel["scores"][f][sel["grid"].index(C)] == min(sel["scores"][f])


def test_custom_table():
    exp = small_experiment(rule="custom", alpha_table={0.01: 0.5, 0.05: 0.6, 0.1: 0.7}, seeds=[0], C="auto")
    t = run_rates(exp, timing=False)
    assert sorted({r["alpha"] for r in t.rows}) == [0.5, 0.6, 0.7]


def test_csv_round_trip(tmp_path):
    t = run_rates(small_experiment(seeds=[0, 1]), timing=False)
    write_rate_table(t, tmp_path / "r.csv", timing=False)
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == ",".join(CSV_HEADER)
    rows = read_rate_csv(tmp_path / "r.csv")
    assert [r["l2_error"] for r in rows] == [r["l2_error"] for r in t.rows]
    meta = json.loads((tmp_path / "r.json").read_text())
    assert meta["version"] and meta["config"]["deltas"] == [0.01, 0.05, 0.1] and "tolerances" in meta


def test_config_loading(tmp_path):
    (tmp_path / "c.toml").write_text('problem = {kind = "diagonal", n = 16}\nfilters = ["soft"]\ndeltas = [0.1]\nseeds = [0]\n')
    assert load_config(tmp_path / "c.toml").filters[0].name == "soft"
    (tmp_path / "c.json").write_text('{"problem": {"kind": "diagonal"},\n "filters": ["soft"], "deltas": [0.1], "seeds": [0], "C": 2}')
    assert load_config(tmp_path / "c.json").C == 2
    (tmp_path / "bad.json").write_text('{"problem": {},\n "filters": [}')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(tmp_path / "bad.json")
    with pytest.raises(ConfigError, match="colour"):
        experiment_from_mapping({"problem": {}, "filters": ["soft"], "deltas": [0.1], "seeds": [0], "colour": 1})
    with pytest.raises(ConfigError, match="seeds"):
        experiment_from_mapping({"problem": {}, "filters": ["soft"], "deltas": [0.1]})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_filter_params_in_config():
    exp = experiment_from_mapping(
        {"problem": DIAG, "filters": [{"name": "huber-a", "b": 2.0}], "deltas": [0.1], "seeds": [0], "C": {"huber-a[b=2.0]": 1.5}}
    )
    assert exp.filters[0].label == "huber-a[b=2.0]" and exp.c_for(exp.filters[0]) == 1.5


def test_stability_sweep():
    p = make_problem(DIAG)
    eps = [10.0**-k for k in range(1, 13)]
    for name in ("soft", "huber-a", "huber-b", "tikhonov"):
        res = run_stability_sweep(p, make_family(name), 0.1, eps)
        assert res["pass"], name
        assert res["rows"][-1]["output_diff"] < 1e-10
    zero = run_stability_sweep(p, make_family("soft"), 0.1, [0.0])
    assert zero["rows"][0]["output_diff"] == 0.0


def test_convergence_sweep_tikhonov_and_sparsity_ordering():
    p = make_problem(DIAG)
    tik = run_convergence_sweep(p, make_family("tikhonov"), seeds=range(4))
    soft = run_convergence_sweep(p, make_family("soft"), seeds=range(4))
    assert tik["decreasing"] and soft["decreasing"]
    exact_t = [r["exact_error"] for r in tik["rows"]]
    assert all(b < a for a, b in zip(exact_t, exact_t[1:]))
    # sparse truth: soft thresholding ends with lower error than tikhonov
    assert soft["final_error"] < tik["final_error"]
