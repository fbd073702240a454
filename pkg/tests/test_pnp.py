import numpy as np
import pytest

from nldfd.filters import make_family
from nldfd.frame_core import DimensionError, dfd_diagonal
from nldfd.pnp import (
    DenoiserFamily,
    PnPProblem,
    alpha_for_delta,
    check_diagonal_conditions,
    denoiser_from_filter,
    diagonal_pnp_reduce,
    measure_admissibility,
    pnp_convergence_run,
    pnp_fixed_point,
)
from nldfd.reconstruction import ConvergenceError

K = np.linspace(0.5, 1.0, 12)
GAMMA = 0.9


@pytest.fixture
def staircase():
    f = make_family("pnp-c", gamma=GAMMA)
    return f, denoiser_from_filter(f, dfd_diagonal(K), GAMMA)


def test_componentwise_action(staircase, rng):
    _, d = staircase
    z = rng.standard_normal(K.size)
    w = z.copy()
    w[3] += 1.0
    diff = d(0.5, w) - d(0.5, z)
    assert np.all(diff[np.arange(K.size) != 3] == 0)


def test_zero_maps_to_zero(staircase):
    _, d = staircase
    assert np.all(d(0.3, np.zeros(K.size)) == 0)
    p = PnPProblem(K, np.zeros(K.size), GAMMA)
    assert np.all(pnp_fixed_point(p, d, 0.3) == 0)


def test_denoiser_requires_penalty():
    from nldfd.filters import ScalarFilterFamily

    with pytest.raises(ValueError):
        denoiser_from_filter(ScalarFilterFamily("raw", lambda a, k, c: c), dfd_diagonal(K), GAMMA)
    with pytest.raises(ValueError):
        denoiser_from_filter(make_family("soft"), dfd_diagonal(K), 1.5)


def test_denoiser_shape_check(staircase):
    with pytest.raises(DimensionError):
        staircase[1](0.5, np.ones(3))


def test_residual_decays_as_alpha_vanishes(staircase, rng):
    _, d = staircase
    z = rng.standard_normal(K.size)
    res = [np.linalg.norm(d(2.0**-k, z) - z) for k in range(0, 21, 4)]
    assert all(b <= a for a, b in zip(res, res[1:]))
    assert res[-1] < 1e-3


def test_pnp_problem_step_validation():
    with pytest.raises(ValueError):
        PnPProblem(K, np.zeros(K.size), 2.5)
    with pytest.raises(DimensionError):
        PnPProblem(K, np.zeros(3), 0.5)


def test_fixed_point_matches_filter_and_is_unique(staircase, rng):
    f, d = staircase
    z = rng.standard_normal(K.size)
    p = PnPProblem(K, z, GAMMA)
    for a in (1.0, 0.25):
        xs = [pnp_fixed_point(p, d, a, x0=None if i == 0 else 4 * rng.standard_normal(K.size)) for i in range(5)]
        assert max(np.max(np.abs(x - xs[0])) for x in xs) < 1e-8
        assert np.allclose(xs[0], f(a, K, z) / K, atol=1e-8)


def test_fixed_point_failure_carries_trace(staircase):
    _, d = staircase
    p = PnPProblem(K, np.ones(K.size), GAMMA)
    with pytest.raises(ConvergenceError) as exc:
        pnp_fixed_point(p, d, 0.5, max_iter=3)
    assert exc.value.trace and exc.value.residual > 0


def test_admissibility_staircase_passes(staircase, rng):
    _, d = staircase
    rep = measure_admissibility(d, [2.0**-k for k in range(0, 12)], rng.standard_normal((6, K.size)))
    assert rep["pass"]
    assert all(m <= b + 1e-9 for m, b in zip(rep["D1"]["lipschitz"], rep["D1"]["declared"]))
    assert "range_note" in rep


def test_admissibility_identity_fails_d1(rng):
    ident = DenoiserFamily(lambda a, k, x: np.asarray(x, dtype=float) + 0.0 * k, K)
    rep = measure_admissibility(ident, [1.0, 0.5], rng.standard_normal((4, K.size)))
    assert not rep["D1"]["pass"] and rep["D1"]["lipschitz"][0] == pytest.approx(1.0)


def test_admissibility_huber_reported(rng):
    d = denoiser_from_filter(make_family("huber-a"), dfd_diagonal(K), GAMMA)
    rep = measure_admissibility(d, [1.0, 0.25, 2.0**-6], rng.standard_normal((4, K.size)))
    assert set(rep) >= {"D1", "D2", "D3", "D4", "pass"}
    assert all(0 < l <= 1 + 1e-9 for l in rep["D1"]["lipschitz"])


def test_reduce_recovers_filters():
    dfd = dfd_diagonal(K)
    c = np.linspace(-4, 4, 33)
    for name in ("pnp-c", "huber-a", "soft"):
        f = make_family(name)
        d = denoiser_from_filter(f, dfd, GAMMA)
        red = diagonal_pnp_reduce(d.component, dfd, GAMMA)
        for a in (1.0, 0.1):
            for k in (0.5, 1.0):
                assert np.allclose(red(a, k, c), f(a, k, c), atol=1e-8)
        assert red(0.3, 0.7, 0.0) == 0.0


def test_reduce_linear_shrinkage_closed_form():
    # d(x) = x / (1 + a g k^2) gives x* = z / (k (1 + a)), i.e. a Tikhonov-like filter c / (1 + a)
    dfd = dfd_diagonal(K)
    d_maps = lambda a, k, x: np.asarray(x) / (1 + a * GAMMA * np.asarray(k) ** 2)
    red = diagonal_pnp_reduce(d_maps, dfd, GAMMA)
    c = np.linspace(-3, 3, 13)
    for a in (1.0, 0.2):
        for k in (0.5, 0.9):
            expected = c / (1 + a)
            assert np.allclose(red(a, k, c), expected, atol=1e-10)


def test_reduce_reports_non_contraction():
    dfd = dfd_diagonal(K)
    red = diagonal_pnp_reduce(lambda a, k, x: 2.0 * np.asarray(x) + 1.0, dfd, GAMMA)
    with pytest.raises(ValueError, match="alpha=0.5"):
        red(0.5, 0.7, 1.0)


def test_diagonal_conditions_report():
    soft = lambda a, k, x: np.sign(x) * np.maximum(np.abs(x) - a, 0.0)
    rep = check_diagonal_conditions(soft, [0.5, 1.0], [1.0, 0.1, 0.01], GAMMA, d=1.0, e=1.0)
    assert rep["a"] and rep["b"] and rep["c"]
    assert check_diagonal_conditions(soft, [1.0], [1.0], GAMMA)["c"] is None


@pytest.mark.parametrize("rule,delta,alpha", [("linear", 0.1, 0.1), ("sqrt", 0.1, 0.01)])
def test_alpha_for_delta(rule, delta, alpha):
    a = alpha_for_delta(delta, rule)
    assert a == pytest.approx(alpha)
    ell = 1 / (1 + a) if rule == "linear" else 1 / (1 + np.sqrt(a))
    assert (1 - ell) / ell == pytest.approx(delta)


def test_exact_data_convergence(staircase, rng):
    _, d = staircase
    c = rng.standard_normal(K.size)
    alphas = [2.0**-k for k in range(2, 15, 3)]
    rows = pnp_convergence_run(K, c, d, GAMMA, [0.0] * len(alphas), alphas=alphas, final_tol=1e-3)
    errs = [r["error"] for r in rows]
    assert all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] < 1e-3
    assert set(rows[0]) == {"delta", "alpha", "lipschitz", "iterations", "error"}


def test_noisy_runs_with_two_seeds_agree(staircase, rng):
    _, d = staircase
    c = rng.standard_normal(K.size)
    e0 = pnp_convergence_run(K, c, d, GAMMA, [0.05], seed=0)[0]["error"]
    e1 = pnp_convergence_run(K, c, d, GAMMA, [0.05], seed=1)[0]["error"]
    assert 0.5 < e0 / e1 < 2.0


def test_sqrt_rule_recorded():
    f = make_family("pnp-c", gamma=GAMMA, ell_rule="sqrt")
    d = denoiser_from_filter(f, dfd_diagonal(K), GAMMA)
    rows = pnp_convergence_run(K, np.ones(K.size), d, GAMMA, [0.1, 0.05], ell_rule="sqrt")
    for r in rows:
        assert r["alpha"] == pytest.approx(r["delta"] ** 2)
        assert r["lipschitz"] == pytest.approx(1 / (1 + r["delta"]))
