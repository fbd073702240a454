import numpy as np
import pytest

from conftest import brute_prox
from nldfd.filters import (
    KappaRegularizer,
    check_assumption_A,
    check_assumption_B,
    check_assumption_C,
    check_filter_axioms,
    empirical_lipschitz,
    family_from_phi1,
    huber_phi1,
    identity_family,
    linear_filter_function,
    make_family,
    staircase_slope,
)
from nldfd.prox_calculus import prox

ANALYTIC = ["soft", "huber-a", "huber-b", "pnp-c", "tikhonov", "tsvd"]


# Values read off the plotted filter curves at kappa = 1/3 with b = d = 1.
@pytest.mark.parametrize("alpha,knot,shift", [(1.0, 3.0, 2.7), (0.25, 0.975, 0.675)])
def test_huber_a_plotted_branches(alpha, knot, shift):
    f = make_family("huber-a", b=1.0, d=1.0)
    k = 1.0 / 3.0
    slope = k**2 / (k**2 + alpha)
    assert f(alpha, k, knot) == pytest.approx(slope * knot, rel=1e-12)
    assert f(alpha, k, knot + 0.5) == pytest.approx(knot + 0.5 - shift, rel=1e-12)


@pytest.mark.parametrize("alpha,knot,shift", [(1.0, 3.0, 2.7), (0.25, 0.75, 0.0625 * 27 / 3.25)])
def test_huber_b_plotted_branches(alpha, knot, shift):
    f = make_family("huber-b", b=1.0, d=1.0)
    k = 1.0 / 3.0
    slope = k**2 / (k**2 + alpha)
    assert f(alpha, k, knot) == pytest.approx(slope * knot, rel=1e-12)
    assert f(alpha, k, knot + 0.5) == pytest.approx(knot + 0.5 - shift, rel=1e-12)


@pytest.mark.parametrize("alpha,slope", [(1.0, 1 / 4), (0.5, 2 / 5), (0.25, 4 / 7)])
def test_staircase_plotted_slopes(alpha, slope):
    # kappa = 1/3 and gamma kappa^2 = 1/3
    f = make_family("pnp-c", gamma=3.0, kappa_max=0.5)
    k = 1.0 / 3.0
    assert staircase_slope(alpha, k, 3.0) == pytest.approx(slope, rel=1e-14)
    t = alpha / 3
    assert f(alpha, k, 0.5 * t) == pytest.approx(slope * 0.5 * t, rel=1e-14)
    assert f(alpha, k, 1.5 * t) == pytest.approx(slope * t, rel=1e-14)  # plateau
    assert f(alpha, k, 3 * t) == pytest.approx(slope * 2 * t, rel=1e-14)


def test_staircase_rejects_large_gamma():
    with pytest.raises(ValueError):
        make_family("pnp-c", gamma=1.0, kappa_max=1.0)


def test_unknown_family():
    with pytest.raises(ValueError):
        make_family("wiener")


@pytest.mark.parametrize("name", ANALYTIC)
def test_filter_is_prox_of_its_penalty(name):
    f = make_family(name)
    c = np.linspace(-5, 5, 41)
    for k in (1.0, 0.3):
        for a in (0.8, 0.05):
            assert np.allclose(f(a, k, c), prox(f.analytic_penalty(a, k), c), atol=1e-12)


@pytest.mark.parametrize("name", ["soft", "huber-a", "huber-b", "pnp-c", "tikhonov"])
def test_filter_matches_brute_force_prox(name):
    f = make_family(name)
    for c in (-2.3, 0.07, 1.1):
        assert float(f(0.4, 0.7, c)) == pytest.approx(brute_prox(f.analytic_penalty(0.4, 0.7), c), abs=2e-4)


def test_linear_filter_functions():
    a, k, c = 0.1, 0.5, 2.0
    assert make_family("tikhonov")(a, k, c) == pytest.approx(k * linear_filter_function("tikhonov", a, k) * c)
    assert make_family("tsvd")(a, k, c) == pytest.approx(k * linear_filter_function("tsvd", a, k) * c)
    assert make_family("tsvd")(0.5, k, c) == 0.0


def test_evaluate_validates_inputs():
    f = make_family("soft")
    with pytest.raises(ValueError):
        f(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        f(1.0, -1.0, 1.0)


@pytest.mark.parametrize("name", ANALYTIC)
def test_axiom_suite(name):
    rep = check_filter_axioms(make_family(name))
    assert rep["pass"], rep["parts"]
    assert rep["parts"]["F3"]["worst_case"] < 0
    assert rep["parts"]["F4"]["final_residual"] < 1e-3


def test_axioms_fail_for_expansive_map():
    from nldfd.filters import ScalarFilterFamily

    bad = ScalarFilterFamily("double", lambda a, k, c: 2 * c)
    rep = check_filter_axioms(bad, kappas=(1.0,), alphas=(1.0,), f4_schedule=(1.0,))
    assert not rep["parts"]["F2"]["pass"]


def test_from_phi1_reproduces_huber_a():
    b, d = 1.0, 1.0
    g = family_from_phi1(huber_phi1(b, d), b, d / (1 + b))
    h = make_family("huber-a", b=b, d=d)
    c = np.linspace(-6, 6, 61)
    for k in (1.0, 0.25):
        for a in (1.0, 0.3, 0.01):
            assert np.allclose(g(a, k, c), h(a, k, c), atol=1e-12)


def test_from_phi1_linear_generator():
    g = family_from_phi1(lambda k, x: 0.5 * np.asarray(x), 1.0, 1.0)
    c = np.linspace(-3, 3, 13)
    assert np.allclose(g(0.25, 1.0, c), c / 1.25, atol=1e-12)


def test_assumption_classifications():
    assert check_assumption_A(make_family("huber-a")).passed
    rep = check_assumption_A(make_family("huber-b"))
    assert not rep.passed and not rep.parts["A1"]["pass"]
    assert check_assumption_B(make_family("huber-b")).passed
    rep = check_assumption_B(make_family("pnp-c"))
    assert not rep.passed and not rep.parts["B1"]["pass"]
    assert check_assumption_C(make_family("pnp-c")).passed


def test_huber_a_b_constants():
    b = 2.0
    f = make_family("huber-a", b=b, d=1.0)
    c = 1.0 / (1.0 + b)
    assert f.constant("d", 1.0) == pytest.approx(b * c)
    assert f.constant("e") == pytest.approx(1 / (2 * np.sqrt(b)))
    assert check_assumption_B(f, d=b * c, e=1 / (2 * np.sqrt(b))).passed


def test_assumption_C_rejects_non_contractive():
    with pytest.raises(ValueError):
        check_assumption_C(make_family("tikhonov"), gamma=None)
    assert not check_assumption_C(identity_family(), gamma=0.9).passed


def test_empirical_lipschitz():
    assert empirical_lipschitz(lambda x: 0.3 * x, np.linspace(-1, 1, 11)) == pytest.approx(0.3)
    assert empirical_lipschitz(np.abs, np.linspace(-1, 1, 11)) == pytest.approx(1.0)


def test_kappa_regularizer_sums_terms():
    f = make_family("soft")
    k = np.array([1.0, 0.5])
    R = KappaRegularizer(f, k)
    x = np.array([2.0, -4.0])
    # s(kappa x) = (alpha / kappa) |kappa x| = alpha |x|
    assert R(0.5, x) == pytest.approx(0.5 * 6.0)
    assert R.stationary


def test_tsvd_fails_assumption_A():
    assert not check_assumption_A(make_family("tsvd")).passed
