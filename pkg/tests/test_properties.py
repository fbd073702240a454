"""Property-based checks of the scalar calculus and the filter families."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from nldfd.filters import make_family
from nldfd.frame_core import dfd_diagonal
from nldfd.prox_calculus import AbsQuadPenalty, HuberPenalty, prox, prox_inverse
from nldfd.reconstruction import Reconstructor, filtered_coefficients, variational_oracle

reals = st.floats(-50, 50, allow_nan=False)
pos = st.floats(1e-3, 10, allow_nan=False)
alphas = st.floats(1e-4, 1.0, allow_nan=False)
kappas = st.floats(1e-2, 1.0, allow_nan=False)
families = st.sampled_from(["soft", "huber-a", "huber-b", "pnp-c", "tikhonov", "tsvd"])


@given(families, alphas, kappas, reals, reals)
def test_filters_monotone_nonexpansive(name, a, k, x, y):
    f = make_family(name)
    fx, fy = float(f(a, k, x)), float(f(a, k, y))
    assert (fx - fy) * (x - y) >= -1e-12
    assert abs(fx - fy) <= abs(x - y) * (1 + 1e-12) + 1e-12


@given(families, alphas, kappas)
def test_filters_fix_zero(name, a, k):
    assert float(make_family(name)(a, k, 0.0)) == 0.0


@given(families, alphas, kappas, reals)
def test_filters_are_odd(name, a, k, x):
    f = make_family(name)
    assert float(f(a, k, -x)) == -float(f(a, k, x))


@given(pos, pos, reals)
def test_huber_prox_optimality(w, delta, x):
    pen = HuberPenalty(w, delta)
    y = float(prox(pen, x))
    lo, hi = pen.subgradient(y)
    assert float(lo) - 1e-9 <= x - y <= float(hi) + 1e-9


@given(st.floats(0, 5), st.floats(0, 5), st.floats(0, 5), reals)
def test_absquad_prox_optimality(q, beta, knot, x):
    pen = AbsQuadPenalty(q, beta, knot)
    y = float(prox(pen, x))
    lo, hi = pen.subgradient(y)
    assert float(lo) - 1e-9 * (1 + abs(x)) <= x - y <= float(hi) + 1e-9 * (1 + abs(x))


@given(st.floats(0.01, 3), st.floats(-20, 20))
def test_prox_inverse_contains_point(t, x):
    p = lambda v: np.sign(v) * np.maximum(np.abs(v) - t, 0.0)
    iv = prox_inverse(p, float(p(x)))
    assert iv.contains(x, tol=1e-9 * (1 + abs(x)))


@settings(max_examples=25, deadline=None)
@given(families, alphas, st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.lists(kappas, min_size=3, max_size=3))
def test_variational_oracle_matches_filter(name, a, z, k):
    r = Reconstructor(dfd_diagonal(np.array(k)), make_family(name))
    z = np.array(z)
    direct = filtered_coefficients(r, a, z)
    assert np.allclose(variational_oracle(r, a, z), direct, atol=1e-7 * (1 + np.max(np.abs(direct))))
