"""Desk-scale inverse problems: diagonal, random-matrix and 2-D Radon."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .frame_core import (
    DFD,
    DimensionError,
    LinearOperator,
    dfd_diagonal,
    dfd_from_svd,
    dfd_pseudo_inverse,
    dfd_wavelet_vaguelette,
    haar2d,
)


@dataclass(frozen=True, eq=False)
class InverseProblem:
    operator: LinearOperator
    dfd: DFD
    x_true: np.ndarray
    y_exact: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def coefficients_true(self) -> np.ndarray:
        """``x_true`` in DFD coefficients: ``T_u^* x`` (equals ``x`` for diagonal problems)."""
        return self.dfd.u.vectors @ self.x_true


@dataclass(frozen=True)
class NoiseModel:
    level: float
    seed: int = 0
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported noise kind {self.kind!r}")
        if self.level < 0:
            raise ValueError("noise level must be nonnegative")


def _finish(op: LinearOperator, dfd: DFD, x, meta) -> InverseProblem:
    x = np.asarray(x, dtype=float)
    # project onto ker(A)^perp; exact for a valid DFD
    x = dfd_pseudo_inverse(dfd, op.apply(x))
    for arr in (x,):
        arr.setflags(write=False)
    y = op.apply(x)
    y.setflags(write=False)
    return InverseProblem(op, dfd, x, y, meta)


def make_diagonal_problem(kappas, x_true) -> InverseProblem:
    k = np.atleast_1d(np.asarray(kappas, dtype=float))
    x = np.atleast_1d(np.asarray(x_true, dtype=float))
    if k.shape != x.shape:
        raise DimensionError(f"kappa has {k.size} entries but x_true has {x.size}")
    dfd = dfd_diagonal(k)
    x = x.copy()
    x.setflags(write=False)
    y = k * x
    y.setflags(write=False)
    return InverseProblem(dfd.forward, dfd, x, y, {"kind": "diagonal", "n": int(k.size)})


def random_orthonormal(rng, n: int, r: int) -> np.ndarray:
    q, rr = np.linalg.qr(rng.standard_normal((n, r)))
    return q * np.sign(np.diag(rr))


def make_matrix_problem(rows: int, cols: int, condition: float, seed: int = 0) -> InverseProblem:
    """Random matrix with geometric singular spectrum from 1 to ``1/condition``."""
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be positive")
    if not condition >= 1:
        raise ValueError("condition number must be >= 1")
    rng = np.random.default_rng(seed)
    r = min(rows, cols)
    sig = np.geomspace(1.0, 1.0 / condition, r) if r > 1 else np.ones(1)
    A = random_orthonormal(rng, rows, r) @ np.diag(sig) @ random_orthonormal(rng, cols, r).T
    op = LinearOperator.dense(A)
    meta = {"kind": "matrix", "rows": rows, "cols": cols, "condition": condition, "seed": seed}
    return _finish(op, dfd_from_svd(A), rng.standard_normal(cols), meta)


# ---------------------------------------------------------------------------
# Radon transform


@dataclass(frozen=True, eq=False)
class RadonOperator:
    """Parallel-beam discrete Radon transform on ``n x n`` images.

    Ray-driven with linear interpolation along the axis the ray is most
    aligned with (Joseph's scheme); pixels are unit squares centred on the
    grid and detectors are spaced one pixel apart.
    """

    matrix: np.ndarray
    image_size: int
    angles: np.ndarray
    n_det: int

    @property
    def operator(self) -> LinearOperator:
        return LinearOperator.dense(self.matrix)


def radon_matrix(n: int, n_angles: int, n_det: int | None = None) -> RadonOperator:
    if n_det is None:
        n_det = int(np.ceil(np.sqrt(2) * n)) + 1
    angles = np.pi * np.arange(n_angles) / n_angles
    centre = (n - 1) / 2.0
    grid = np.arange(n) - centre  # pixel centre coordinates
    t = np.arange(n_det) - (n_det - 1) / 2.0
    A = np.zeros((n_angles * n_det, n * n))
    for a, th in enumerate(angles):
        c, s = np.cos(th), np.sin(th)
        rows = a * n_det + np.arange(n_det)
        if abs(s) >= abs(c):
            # ray x cos + y sin = t; step over pixel columns (x), solve for y
            w = 1.0 / abs(s)
            yy = (t[:, None] - grid[None, :] * c) / s  # (det, col)
            pos = yy + centre  # fractional row index, y measured along rows
            i0 = np.floor(pos).astype(int)
            f = pos - i0
            for di, wt in ((0, 1 - f), (1, f)):
                ii = i0 + di
                ok = (ii >= 0) & (ii < n)
                r_idx, col = np.nonzero(ok)
                np.add.at(A, (rows[r_idx], ii[ok] * n + col), w * wt[ok])
        else:
            w = 1.0 / abs(c)
            xx = (t[:, None] - grid[None, :] * s) / c  # (det, row)
            pos = xx + centre
            j0 = np.floor(pos).astype(int)
            f = pos - j0
            for dj, wt in ((0, 1 - f), (1, f)):
                jj = j0 + dj
                ok = (jj >= 0) & (jj < n)
                r_idx, row = np.nonzero(ok)
                np.add.at(A, (rows[r_idx], row * n + jj[ok]), w * wt[ok])
    A.setflags(write=False)
    return RadonOperator(A, n, angles, n_det)


def phantom_blocks(n: int) -> np.ndarray:
    """Piecewise-constant image with edges on a coarse dyadic grid."""
    img = np.zeros((n, n))
    q = max(n // 8, 1)
    img[q : 3 * q, q : 5 * q] = 1.0
    img[4 * q : 7 * q, 2 * q : 4 * q] = 0.5
    img[2 * q : 6 * q, 5 * q : 7 * q] = -0.75
    img[5 * q : 6 * q, 5 * q : 6 * q] = 0.25
    return img


def phantom_ellipses(n: int) -> np.ndarray:
    """A few nested ellipses, in the spirit of the Shepp-Logan head phantom."""
    yy, xx = np.mgrid[-1 : 1 : n * 1j, -1 : 1 : n * 1j]
    spec = [
        (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
        (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
        (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
        (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
        (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    ]
    img = np.zeros((n, n))
    for val, a, b, x0, y0, deg in spec:
        th = np.deg2rad(deg)
        xr = (xx - x0) * np.cos(th) + (yy - y0) * np.sin(th)
        yr = -(xx - x0) * np.sin(th) + (yy - y0) * np.cos(th)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1] += val
    return img


def phantom_square(n: int, side: int | None = None) -> np.ndarray:
    side = n // 2 if side is None else side
    img = np.zeros((n, n))
    lo = (n - side) // 2
    img[lo : lo + side, lo : lo + side] = 1.0
    return img


PHANTOMS = {"blocks": phantom_blocks, "shepp-logan-like": phantom_ellipses, "square": phantom_square}


@lru_cache(maxsize=8)
def _radon_parts(size: int, n_angles: int, levels: int):
    R = radon_matrix(size, n_angles)
    return R, dfd_wavelet_vaguelette(R, levels)


def make_radon_problem(size: int = 32, n_angles: int = 48, phantom: str = "blocks", levels: int = 5) -> InverseProblem:
    if size < 2 or size & (size - 1):
        raise ValueError("image size must be a power of two")
    if n_angles < size:
        raise ValueError("need at least as many angles as the image side")
    if phantom not in PHANTOMS:
        raise ValueError(f"unknown phantom {phantom!r}; choose from {sorted(PHANTOMS)}")
    levels = min(levels, int(np.log2(size)))
    R, dfd = _radon_parts(size, n_angles, levels)
    img = PHANTOMS[phantom](size)
    meta = {
        "kind": "radon",
        "size": size,
        "n_angles": n_angles,
        "n_det": R.n_det,
        "levels": levels,
        "phantom": phantom,
        "wavelet": "haar",
        "vaguelette_norm": "unit",
        "haar_nonzeros": int(np.count_nonzero(np.abs(haar2d(img, levels)) > 1e-12)),
    }
    return _finish(R.operator, dfd, img.ravel(), meta)


def make_problem(spec: dict) -> InverseProblem:
    """Build a problem from a config mapping (``kind`` plus parameters)."""
    spec = dict(spec)
    kind = spec.pop("kind", "diagonal")
    if kind == "diagonal":
        return make_diagonal_problem_spec(**spec)
    if kind == "matrix":
        return make_matrix_problem(**spec)
    if kind == "radon":
        return make_radon_problem(**spec)
    raise ValueError(f"unknown problem kind {kind!r}")


def make_diagonal_problem_spec(
    n: int = 64,
    kappa_min: float = 0.05,
    kappa_max: float = 1.0,
    sparsity: float = 0.9,
    seed: int = 0,
    kappas=None,
    x_true=None,
) -> InverseProblem:
    """Diagonal problem with log-spaced kappas and a sparse random ``x_true``."""
    if kappas is None:
        kappas = np.geomspace(kappa_max, kappa_min, n)
    if x_true is None:
        rng = np.random.default_rng(seed)
        x_true = rng.standard_normal(len(kappas))
        x_true[rng.random(len(kappas)) < sparsity] = 0.0
    p = make_diagonal_problem(kappas, x_true)
    p.meta.update({"kappa_min": float(np.min(kappas)), "kappa_max": float(np.max(kappas)), "sparsity": sparsity, "seed": seed})
    return p


def add_noise(problem: InverseProblem, model: NoiseModel) -> np.ndarray:
    """``y_exact + z`` with ``|z| = level * |y_exact|`` exactly."""
    y = problem.y_exact
    if model.level == 0:
        return y.copy()
    rng = np.random.default_rng(model.seed)
    z = rng.standard_normal(y.shape)
    z *= model.level * np.linalg.norm(y) / np.linalg.norm(z)
    return y + z
