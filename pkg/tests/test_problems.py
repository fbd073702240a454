import numpy as np
import pytest

from nldfd.frame_core import DimensionError, kappa_by_level
from nldfd.problems import (
    NoiseModel,
    add_noise,
    make_diagonal_problem,
    make_matrix_problem,
    make_problem,
    make_radon_problem,
    phantom_blocks,
    radon_matrix,
)


def test_diagonal_problem():
    p = make_diagonal_problem([1.0, 0.5], [2.0, -1.0])
    assert np.allclose(p.y_exact, [2.0, -0.5])
    assert np.allclose(p.coefficients_true, p.x_true)
    with pytest.raises(DimensionError):
        make_diagonal_problem([1.0], [1.0, 2.0])


def test_matrix_problem_condition():
    p = make_matrix_problem(10, 8, 1e3, seed=3)
    s = np.linalg.svd(p.operator.to_dense(), compute_uv=False)
    assert s[0] / s[-1] == pytest.approx(1e3, rel=1e-8)
    assert np.allclose(p.operator.apply(p.x_true), p.y_exact)


def test_noise_has_exact_relative_level():
    p = make_problem({"kind": "diagonal", "n": 32})
    y = add_noise(p, NoiseModel(0.05, seed=7))
    assert np.linalg.norm(y - p.y_exact) == pytest.approx(0.05 * np.linalg.norm(p.y_exact), rel=1e-12)
    assert np.array_equal(y, add_noise(p, NoiseModel(0.05, seed=7)))
    assert np.array_equal(add_noise(p, NoiseModel(0.0)), p.y_exact)
    with pytest.raises(ValueError):
        NoiseModel(-1.0)
    with pytest.raises(ValueError):
        NoiseModel(0.1, kind="poisson")


def test_radon_matrix_projects_mass():
    R = radon_matrix(8, 8)
    img = np.zeros((8, 8))
    img[3, 4] = 1.0
    sino = (R.matrix @ img.ravel()).reshape(8, -1)
    # axis-aligned rays pass through pixel centres, so the unit mass is kept exactly
    assert sino[0].sum() == pytest.approx(1.0, abs=1e-12)
    assert sino[4].sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(sino >= 0)


def test_tiny_radon_wvd():
    p = make_radon_problem(2, 4, levels=1)
    chk = p.dfd.check()
    assert chk["pass"] and chk["dfd3_max"] < 1e-10


def test_radon_input_validation():
    with pytest.raises(ValueError):
        make_radon_problem(6, 8)
    with pytest.raises(ValueError):
        make_radon_problem(8, 4)
    with pytest.raises(ValueError):
        make_radon_problem(8, 8, phantom="cat")


def test_blocks_phantom_is_haar_sparse():
    from nldfd.frame_core import haar2d

    c = haar2d(phantom_blocks(32), 5)
    assert np.count_nonzero(np.abs(c) > 1e-12) < 0.1 * c.size


@pytest.mark.slow
def test_radon_kappa_decays_towards_fine_levels():
    p = make_radon_problem(32, 48)
    by_level = {}
    for lab, k in zip(p.dfd.index.labels, p.dfd.kappa):
        if lab[0] != "a":
            by_level.setdefault(lab[1], []).append(k)
    means = [np.mean(by_level[l]) for l in sorted(by_level)]
    assert all(a < b for a, b in zip(means, means[1:]))
    assert set(kappa_by_level(p.dfd)) == set(range(1, 6))


def test_make_problem_unknown_kind():
    with pytest.raises(ValueError):
        make_problem({"kind": "mri"})
