"""CSV and JSON serialization for vectors, matrices, DFDs and reports."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .frame_core import DFD, DimensionError, Frame, IndexSet, LinearOperator

FMT = "%.17g"


def write_vector(path, x) -> None:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionError("expected a vector")
    np.savetxt(path, x[None, :], fmt=FMT, delimiter=",")


def read_vector(path) -> np.ndarray:
    """Comma- or newline-separated numbers, flattened in row-major order."""
    try:
        a = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: not a numeric CSV ({exc})") from exc
    return a.ravel()


def write_matrix(path, m) -> None:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DimensionError("expected a matrix")
    np.savetxt(path, m, fmt=FMT, delimiter=",")


def read_matrix(path) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: not a numeric CSV ({exc})") from exc


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """JSON with numpy values converted and non-finite floats written as null."""
    return json.dumps(_clean(obj), indent=indent, sort_keys=True, default=_jsonable, allow_nan=False)


def _clean(o):
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return _clean(o.tolist())
    if isinstance(o, (float, np.floating)):
        return float(o) if np.isfinite(o) else None
    return o


def save_dfd(dfd: DFD, directory) -> Path:
    """``header.json`` plus CSV blocks ``u``, ``v``, ``u_dual``, ``kappa`` and ``forward``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    header = {
        "domain_dim": dfd.domain_dim,
        "data_dim": dfd.data_dim,
        "n_atoms": len(dfd),
        "tol_dfd": dfd.tol_dfd,
        "labels": [list(l) if isinstance(l, tuple) else l for l in dfd.index.labels],
        "meta": {k: v for k, v in dfd.meta.items() if isinstance(v, (int, float, str, bool))},
    }
    (d / "header.json").write_text(dumps(header) + "\n")
    write_matrix(d / "u.csv", dfd.u.vectors)
    write_matrix(d / "v.csv", dfd.v.vectors)
    write_matrix(d / "u_dual.csv", dfd.u_dual.vectors)
    write_vector(d / "kappa.csv", dfd.kappa)
    write_matrix(d / "forward.csv", dfd.forward.to_dense())
    return d


def load_dfd(directory) -> DFD:
    d = Path(directory)
    header = json.loads((d / "header.json").read_text())
    n, dom, dat = header["n_atoms"], header["domain_dim"], header["data_dim"]
    u, v, ud = (read_matrix(d / f"{name}.csv") for name in ("u", "v", "u_dual"))
    k = read_vector(d / "kappa.csv")
    A = read_matrix(d / "forward.csv")
    if u.shape != (n, dom) or ud.shape != (n, dom) or v.shape != (n, dat) or k.shape != (n,) or A.shape != (dat, dom):
        raise DimensionError(f"{d}: CSV blocks do not match header dimensions")
    labels = tuple(tuple(l) if isinstance(l, list) else l for l in header["labels"])
    return DFD(
        u=Frame(u),
        v=Frame(v),
        kappa=k,
        u_dual=Frame(ud),
        forward=LinearOperator.dense(A),
        tol_dfd=header["tol_dfd"],
        index=IndexSet(labels),
        meta=header.get("meta", {}),
    )
