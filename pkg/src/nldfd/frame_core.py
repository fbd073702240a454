"""Frames, diagonal frame decompositions (DFDs) and their operators.

Coefficient vectors are plain 1-D float arrays aligned with a DFD's
:class:`IndexSet`.  Frames store their vectors as the rows of a matrix, so
analysis is ``V @ y`` and synthesis is ``V.T @ c``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

SVD_DROP = 1e-12
WVD_TOL = 1e-6


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class IndexSet:
    labels: tuple

    def __post_init__(self):
        if len(self.labels) == 0:
            raise ValueError("index set must be nonempty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("index labels must be unique")

    @classmethod
    def range(cls, n: int) -> "IndexSet":
        return cls(tuple(range(n)))

    def __len__(self):
        return len(self.labels)

    def position(self, label: Hashable) -> int:
        return self.labels.index(label)


@dataclass(frozen=True, eq=False)
class Frame:
    """A finite family of vectors in R^d, stored row-wise."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[0] == 0 or v.shape[1] == 0:
            raise ValueError("frame needs a nonempty (N, d) array of vectors")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]

    def bounds(self, samples: int = 200, seed: int = 0, span_only: bool = True) -> tuple[float, float]:
        """Empirical frame bounds ``sum |<x, u>|^2 / |x|^2`` over sampled ``x``.

        With ``span_only`` the samples are drawn from the span of the frame.
        The exact extremes on the span are the nonzero squared singular values
        of the synthesis matrix, which are included in the estimate.
        """
        rng = np.random.default_rng(seed)
        V = self.vectors
        if span_only:
            x = rng.standard_normal((samples, len(self))) @ V
        else:
            x = rng.standard_normal((samples, self.ambient_dim))
        ratios = np.sum((x @ V.T) ** 2, axis=1) / np.sum(x * x, axis=1)
        s = np.linalg.svd(V, compute_uv=False) ** 2
        s = s[s > SVD_DROP * s[0]]
        return float(min(ratios.min(), s.min())), float(max(ratios.max(), s.max()))


def analysis(frame: Frame, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (frame.ambient_dim,):
        raise DimensionError(f"vector of shape {y.shape} does not match ambient dimension {frame.ambient_dim}")
    return frame.vectors @ y


def synthesis(frame: Frame, c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape != (len(frame),):
        raise DimensionError(f"coefficient vector of shape {c.shape} does not match {len(frame)} frame vectors")
    return frame.vectors.T @ c


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """A linear map R^n -> R^m given by a dense matrix or by callbacks."""

    shape: tuple[int, int]
    matrix: np.ndarray | None = None
    apply_fn: Callable | None = None
    adjoint_fn: Callable | None = None

    @classmethod
    def dense(cls, matrix) -> "LinearOperator":
        m = np.array(matrix, dtype=float)
        if m.ndim != 2:
            raise ValueError("operator matrix must be two-dimensional")
        m.setflags(write=False)
        return cls(m.shape, matrix=m)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.shape[1],):
            raise DimensionError(f"input of shape {x.shape}, operator expects ({self.shape[1]},)")
        return self.matrix @ x if self.matrix is not None else np.asarray(self.apply_fn(x), dtype=float)

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.shape[0],):
            raise DimensionError(f"input of shape {y.shape}, adjoint expects ({self.shape[0]},)")
        return self.matrix.T @ y if self.matrix is not None else np.asarray(self.adjoint_fn(y), dtype=float)

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        return np.column_stack([self.apply(e) for e in np.eye(self.shape[1])])


@dataclass(frozen=True, eq=False)
class DFD:
    """Diagonal frame decomposition ``(u, v, kappa)`` with dual frame ``u_dual``.

    ``u`` and ``u_dual`` live in the domain space, ``v`` in the data space,
    and ``A^* v_l = kappa_l u_l`` up to ``tol_dfd``.
    """

    u: Frame
    v: Frame
    kappa: np.ndarray
    u_dual: Frame
    forward: LinearOperator
    tol_dfd: float = 1e-10
    index: IndexSet | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        k = np.array(self.kappa, dtype=float)
        k.setflags(write=False)
        object.__setattr__(self, "kappa", k)
        n = len(k)
        if not (len(self.u) == len(self.v) == len(self.u_dual) == n):
            raise DimensionError("u, v, u_dual and kappa must share one index set")
        if np.any(~(k > 0)):
            raise ValueError("quasi-singular values must be positive")
        if self.u.ambient_dim != self.forward.shape[1] or self.v.ambient_dim != self.forward.shape[0]:
            raise DimensionError("frames do not match the operator's spaces")
        if self.index is None:
            object.__setattr__(self, "index", IndexSet.range(n))
        elif len(self.index) != n:
            raise DimensionError("index set size differs from the number of atoms")

    def __len__(self):
        return len(self.kappa)

    @property
    def max_kappa(self) -> float:
        return float(self.kappa.max())

    @property
    def domain_dim(self) -> int:
        return self.forward.shape[1]

    @property
    def data_dim(self) -> int:
        return self.forward.shape[0]

    def coefficients(self, y) -> np.ndarray:
        """``T_v^* y``."""
        return analysis(self.v, y)

    def synthesize(self, c) -> np.ndarray:
        """``T_ubar c``."""
        return synthesis(self.u_dual, c)

    def dfd3_residuals(self) -> np.ndarray:
        """``|A^* v_l - kappa_l u_l| / max(1, |u_l|)`` for every atom."""
        if self.forward.matrix is not None:
            Av = self.v.vectors @ self.forward.matrix
        else:
            Av = np.array([self.forward.adjoint(v) for v in self.v.vectors])
        diff = Av - self.kappa[:, None] * self.u.vectors
        unorm = np.linalg.norm(self.u.vectors, axis=1)
        return np.linalg.norm(diff, axis=1) / np.maximum(1.0, unorm)

    def check(self, samples: int = 20, seed: int = 0) -> dict:
        """Evaluate the DFD invariants; returns residuals and a pass flag."""
        rng = np.random.default_rng(seed)
        dfd3 = float(self.dfd3_residuals().max())
        worst = 0.0
        for _ in range(samples):
            x = self.forward.adjoint(rng.standard_normal(self.data_dim))  # in ker(A)^perp
            rec = synthesis(self.u_dual, analysis(self.u, x))
            worst = max(worst, float(np.linalg.norm(rec - x) / np.linalg.norm(x)))
        return {
            "dfd3_max": dfd3,
            "dual_reconstruction_max": worst,
            "max_kappa": self.max_kappa,
            "tol_dfd": self.tol_dfd,
            "pass": dfd3 <= self.tol_dfd and worst <= self.tol_dfd * 10,
        }


def dfd_pseudo_inverse(dfd: DFD, y) -> np.ndarray:
    """``A^+ y = sum_l kappa_l^{-1} <y, v_l> ubar_l``."""
    return dfd.synthesize(dfd.coefficients(y) / dfd.kappa)


def dfd_from_svd(matrix) -> DFD:
    """SVD-based DFD; singular values below ``1e-12 * sigma_max`` are dropped."""
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("need a nonempty 2-D matrix")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0:
        raise ValueError("zero operator: ker(A)^perp is trivial")
    keep = s > SVD_DROP * s[0]
    u = Frame(Vt[keep])
    return DFD(u=u, v=Frame(U[:, keep].T), kappa=s[keep], u_dual=u, forward=LinearOperator.dense(A), meta={"kind": "svd"})


def dfd_diagonal(kappa) -> DFD:
    k = np.atleast_1d(np.asarray(kappa, dtype=float))
    if k.ndim != 1 or np.any(~(k > 0)):
        raise ValueError("diagonal DFD needs positive quasi-singular values")
    e = Frame(np.eye(len(k)))
    return DFD(u=e, v=e, kappa=k, u_dual=e, forward=LinearOperator.dense(np.diag(k)), tol_dfd=1e-12, meta={"kind": "diagonal"})


# ---------------------------------------------------------------------------
# Haar wavelets and the wavelet-vaguelette decomposition


def _haar_step(x, axis):
    a = np.take(x, range(0, x.shape[axis], 2), axis=axis)
    b = np.take(x, range(1, x.shape[axis], 2), axis=axis)
    return np.concatenate([(a + b) / np.sqrt(2), (a - b) / np.sqrt(2)], axis=axis)


def _haar_step_inv(x, axis):
    h = x.shape[axis] // 2
    a = np.take(x, range(h), axis=axis)
    d = np.take(x, range(h, 2 * h), axis=axis)
    out = np.empty_like(x)
    idx_even = [slice(None)] * x.ndim
    idx_odd = [slice(None)] * x.ndim
    idx_even[axis] = slice(0, None, 2)
    idx_odd[axis] = slice(1, None, 2)
    out[tuple(idx_even)] = (a + d) / np.sqrt(2)
    out[tuple(idx_odd)] = (a - d) / np.sqrt(2)
    return out


def _check_haar_size(n: int, levels: int):
    if n < 1 or n & (n - 1) or levels < 1 or n < 2**levels:
        raise ValueError(f"image side {n} must be a power of two >= 2**levels (levels={levels})")


def haar2d(image, levels: int) -> np.ndarray:
    """Orthonormal 2-D Haar transform in the usual nested-quadrant layout."""
    x = np.array(image, dtype=float)
    n = x.shape[0]
    _check_haar_size(n, levels)
    s = n
    for _ in range(levels):
        blk = x[:s, :s]
        x[:s, :s] = _haar_step(_haar_step(blk, 0), 1)
        s //= 2
    return x


def ihaar2d(coeffs, levels: int) -> np.ndarray:
    x = np.array(coeffs, dtype=float)
    n = x.shape[0]
    _check_haar_size(n, levels)
    s = n >> (levels - 1)
    for _ in range(levels):
        blk = x[:s, :s]
        x[:s, :s] = _haar_step_inv(_haar_step_inv(blk, 1), 0)
        s *= 2
    return x


def haar_labels(n: int, levels: int) -> list[tuple]:
    """Label ``(kind, level, row, col)`` for each coefficient slot (row-major).

    ``level`` is 1 for the finest details and ``levels`` for the coarsest;
    ``kind`` is ``"a"`` for the approximation block, else ``"h"``, ``"v"`` or
    ``"d"``.
    """
    labels = []
    coarse = n >> levels
    for r in range(n):
        for c in range(n):
            m = max(r, c)
            if m < coarse:
                labels.append(("a", levels, r, c))
                continue
            lev = 1
            while m < n >> lev:
                lev += 1
            s = n >> lev
            kind = "h" if r < s else ("v" if c < s else "d")
            labels.append((kind, lev, r, c))
    return labels


def haar_basis(n: int, levels: int) -> np.ndarray:
    """Rows are the orthonormal 2-D Haar atoms (flattened row-major)."""
    _check_haar_size(n, levels)
    N = n * n
    B = np.empty((N, N))
    for i in range(N):
        e = np.zeros(N)
        e[i] = 1.0
        B[i] = ihaar2d(e.reshape(n, n), levels).ravel()
    return B


def dfd_wavelet_vaguelette(radon, levels: int, tol: float = WVD_TOL) -> DFD:
    """Numeric wavelet-vaguelette decomposition of a discrete operator.

    ``radon`` must expose ``matrix`` (dense, acting on row-major flattened
    square images) and ``image_size``.  For each Haar atom ``u_l`` the
    minimum-norm solution ``w`` of ``A^T w = u_l`` is computed; then
    ``v_l = w / |w|`` and ``kappa_l = 1 / |w|``.
    """
    n = int(radon.image_size)
    _check_haar_size(n, levels)
    A = np.asarray(radon.matrix, dtype=float)
    if A.shape[1] != n * n:
        raise DimensionError("operator does not act on n x n images")
    U = haar_basis(n, levels)
    Us, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > SVD_DROP * s[0]
    # w = pinv(A^T) u = Us S^-1 Vt u, computed for all atoms at once
    W = Us[:, keep] @ ((Vt[keep] @ U.T) / s[keep, None])
    norms = np.linalg.norm(W, axis=0)
    resid = np.linalg.norm(A.T @ W - U.T, axis=0)
    labels = haar_labels(n, levels)
    bad = np.flatnonzero(~(resid <= tol) | ~(norms > 0))
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"vaguelette construction failed for atom {labels[i]} (residual {resid[i]:.3e})")
    V = (W / norms).T
    u = Frame(U)
    return DFD(
        u=u,
        v=Frame(V),
        kappa=1.0 / norms,
        u_dual=u,
        forward=LinearOperator.dense(A),
        tol_dfd=tol,
        index=IndexSet(tuple(labels)),
        meta={"kind": "wavelet-vaguelette", "levels": levels, "image_size": n},
    )


def kappa_by_level(dfd: DFD) -> dict[int, float]:
    """Mean quasi-singular value per wavelet level (WVD only)."""
    out: dict[int, list] = {}
    for lab, k in zip(dfd.index.labels, dfd.kappa):
        out.setdefault(lab[1], []).append(k)
    return {lev: float(np.mean(v)) for lev, v in sorted(out.items())}
