import json

import pytest

from nldfd.cli import main


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_filter_exit_codes(capsys):
    assert run(capsys, "verify-filter", "--family", "huber-a", "--b", "1", "--d", "1", "--check", "A")[0] == 0
    code, out, _ = run(capsys, "verify-filter", "--family", "huber-b", "--check", "A", "--json")
    rep = json.loads(out)
    assert code == 1 and rep["checks"]["A"]["parts"]["A1"]["pass"] is False
    assert run(capsys, "verify-filter", "--family", "soft", "--check", "F")[0] == 0
    assert run(capsys, "verify-filter", "--family", "nope")[0] == 2
    assert run(capsys, "verify-filter", "--family", "soft", "--check", "Z")[0] == 2


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["reconstruct", "--family", "soft", "--alpha", "1", "--bogus"])
    assert exc.value.code == 2


def test_reconstruct_near_exact_and_deterministic(tmp_path, capsys):
    args = ["reconstruct", "--family", "tikhonov", "--alpha", "1e-12", "--json"]
    code, out, _ = run(capsys, *args, "--output", str(tmp_path / "a"))
    assert code == 0 and json.loads(out)["relative_error"] < 1e-6
    run(capsys, *args, "--output", str(tmp_path / "b"))
    for f in ("x.csv", "coefficients.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_reconstruct_input_file(tmp_path, capsys):
    (tmp_path / "y.csv").write_text("1,2,3\n")
    code, _, err = run(capsys, "reconstruct", "--family", "soft", "--alpha", "0.1", "--input", str(tmp_path / "y.csv"))
    assert code == 2 and "shape" in err
    assert run(capsys, "reconstruct", "--family", "soft", "--alpha", "0.1", "--input", str(tmp_path / "none.csv"))[0] == 2
    (tmp_path / "y4.csv").write_text("1,2,3,4\n")
    code, out, _ = run(capsys, "reconstruct", "--family", "soft", "--alpha", "0.1", "--n", "4", "--input", str(tmp_path / "y4.csv"), "--json")
    assert code == 0 and "l2_error" not in json.loads(out)


@pytest.mark.slow
def test_reconstruct_radon_reports_error(capsys):
    code, out, _ = run(capsys, "reconstruct", "--family", "soft", "--alpha", "0.5", "--problem", "radon", "--noise", "0.05", "--json")
    assert code == 0 and "l2_error" in json.loads(out)


CONFIG = """
problem = {kind = "diagonal", n = 32}
filters = ["soft", "huber-a", "huber-b"]
deltas = [0.01, 0.05]
seeds = [0, 1, 2]
"""


def test_rates_demo_config(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(CONFIG)
    code, _, _ = run(capsys, "rates", "--config", str(cfg), "--out", str(tmp_path / "a.csv"), "--no-timing", "--threads", "2")
    assert code == 0
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert len(lines) == 1 + 3 * 2 * 3
    run(capsys, "rates", "--config", str(cfg), "--out", str(tmp_path / "b.csv"), "--no-timing")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").exists()


def test_rates_config_errors(tmp_path, capsys):
    cfg = tmp_path / "e.toml"
    cfg.write_text(CONFIG.replace("seeds = [0, 1, 2]", "seeds = []"))
    code, _, err = run(capsys, "rates", "--config", str(cfg), "--out", str(tmp_path / "e.csv"))
    assert code == 2 and "seeds" in err
    cfg.write_text("problem = {kind =")
    code, _, err = run(capsys, "rates", "--config", str(cfg), "--out", str(tmp_path / "e.csv"))
    assert code == 2 and "line 1" in err


@pytest.mark.parametrize("which,family", [("3.3", "huber-a"), ("2.3", "soft"), ("5.2", "pnp-c"), ("2.4", "huber-a"), ("2.5", "pnp-c")])
def test_check_lemmas(capsys, which, family):
    code, out, _ = run(capsys, "check-lemmas", "--which", which, "--family", family, "--json")
    assert code == 0 and json.loads(out)["pass"] is True


def test_check_lemmas_unknown_id(capsys):
    assert run(capsys, "check-lemmas", "--which", "9.9", "--family", "soft")[0] == 2
    assert run(capsys, "check-lemmas", "--which", "2.5", "--family", "soft")[0] == 2


def test_pnp_command(tmp_path, capsys):
    code, out, _ = run(capsys, "pnp", "--levels", "4", "--out", str(tmp_path / "p.csv"), "--json")
    rep = json.loads(out)
    assert code == 0 and rep["admissibility"]["pass"]
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "delta,alpha,lipschitz,iterations,error"
    assert run(capsys, "pnp", "--step", "1.5")[0] == 2


def test_human_output_without_json(capsys):
    code, out, _ = run(capsys, "check-lemmas", "--which", "2.3", "--family", "soft")
    assert code == 0 and out.strip() == "lemma 2.3 on soft: PASS"


def test_verify_filter_respects_kappa_max(capsys):
    # gamma = 3 is only admissible for kappa <= 1/sqrt(3)
    assert main(["verify-filter", "--family", "pnp-c", "--gamma", "3", "--kappa-max", "0.5", "--check", "F", "--check", "C"]) == 0
    assert main(["verify-filter", "--family", "pnp-c", "--gamma", "3", "--check", "C"]) == 2
    capsys.readouterr()
