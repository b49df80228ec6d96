"""Closed-form ridge fits of the confidence matrix, linear and kernelized.

Both fits minimize a squared loss against the confidence matrix P plus a
ridge penalty, with an unpenalized bias row.  Eliminating the bias leaves a
single dense linear system whose matrix carries a rank-one centering term and
is therefore not symmetric; it is solved by LU with partial pivoting, and a
1-norm condition estimate guards against effectively singular systems.

The kernel system matrix K + beta*I - (1 1^T K) / m is constant across
alternating-minimization iterations, so `KernelRidgeSolver` factors it once
and re-solves for each new P.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from .kernel import gram_matrix

__all__ = [
    "LinearModel",
    "KernelModel",
    "SingularSystemError",
    "KernelRidgeSolver",
    "fit_linear",
    "fit_kernel",
    "model_outputs",
    "save_model",
    "load_model",
]

MODEL_MAGIC = "sure-model 1"
RCOND_FLOOR = 1e-13
SYMMETRY_TOL = 1e-8


class SingularSystemError(np.linalg.LinAlgError):
    """The ridge system matrix is singular to working precision."""


@dataclass(frozen=True)
class LinearModel:
    """Linear scorer x -> W^T x + b with W (n, l) and b (l,)."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if W.ndim != 2 or b.shape != (W.shape[1],):
            raise ValueError("W must be (n, l) and b (l,)")
        if not (np.isfinite(W).all() and np.isfinite(b).all()):
            raise ValueError("model parameters must be finite")
        for arr in (W, b):
            arr.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class KernelModel:
    """Kernel scorer keeping the training instances and combination weights.

    Scores a query row x as sum_i A[i] * k(x, x_i) + b with the Gaussian
    kernel of bandwidth sigma.
    """

    train_X: np.ndarray
    A: np.ndarray
    b: np.ndarray
    sigma: float

    def __post_init__(self):
        X = np.asarray(self.train_X, dtype=np.float64)
        A = np.asarray(self.A, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if X.ndim != 2 or A.ndim != 2 or A.shape[0] != X.shape[0]:
            raise ValueError("A must have one row per training instance")
        if b.shape != (A.shape[1],):
            raise ValueError("b must have one entry per label")
        if not (np.isfinite(X).all() and np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("model parameters must be finite")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        for arr in (X, A, b):
            arr.setflags(write=False)
        object.__setattr__(self, "train_X", X)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sigma", float(self.sigma))


def _lu_with_cond(M: np.ndarray, what: str):
    anorm = np.linalg.norm(M, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # LU of a singular matrix warns; rcond handles it
        lu, piv = lu_factor(M)
    gecon = get_lapack_funcs(("gecon",), (lu,))[0]
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or not np.isfinite(rcond) or rcond < RCOND_FLOOR:
        raise SingularSystemError(
            f"singular {what} system matrix (reciprocal 1-norm condition estimate {rcond:.3e})"
        )
    return (lu, piv), float(rcond)


def fit_linear(X, P, beta: float) -> LinearModel:
    """Closed-form minimizer of ||X W + 1 b^T - P||_F^2 + beta ||W||_F^2.

    W = (X^T X + beta I - X^T 1 1^T X / m)^(-1) (X^T P - X^T 1 1^T P / m),
    b = (P^T 1 - W^T X^T 1) / m.
    """
    X = np.asarray(X, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    if X.ndim != 2 or P.ndim != 2 or X.shape[0] != P.shape[0]:
        raise ValueError("X and P must be 2-D with matching row counts")
    if not beta > 0:
        raise ValueError("beta must be positive")
    m, n = X.shape
    xsum = X.sum(axis=0)
    psum = P.sum(axis=0)
    M = X.T @ X + beta * np.eye(n) - np.outer(xsum, xsum) / m
    rhs = X.T @ P - np.outer(xsum, psum) / m
    factors, _ = _lu_with_cond(M, "linear ridge")
    W = lu_solve(factors, rhs)
    b = (psum - W.T @ xsum) / m
    return LinearModel(W, b)


class KernelRidgeSolver:
    """Factors the kernel ridge system once; solve() refits for any P."""

    def __init__(self, K, beta: float):
        K = np.asarray(K, dtype=np.float64)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("K must be square")
        if not beta > 0:
            raise ValueError("beta must be positive")
        asym = float(np.abs(K - K.T).max())
        if asym > SYMMETRY_TOL:
            raise ValueError(f"kernel matrix asymmetric: max |K - K^T| = {asym:.3e}")
        m = K.shape[0]
        self.m = m
        self.ksum = K.sum(axis=0)  # K^T 1 == K 1 up to the symmetry tolerance
        M = K + beta * np.eye(m) - np.outer(np.ones(m), self.ksum) / m
        self._factors, self.rcond = _lu_with_cond(M, "kernel ridge")

    def solve(self, P) -> tuple[np.ndarray, np.ndarray]:
        P = np.asarray(P, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != self.m:
            raise ValueError("P must have one row per training instance")
        psum = P.sum(axis=0)
        A = lu_solve(self._factors, P - np.outer(np.ones(self.m), psum) / self.m)
        b = (psum - A.T @ self.ksum) / self.m
        return A, b


def fit_kernel(K, P, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form minimizer of ||K A + 1 b^T - P||_F^2 + beta tr(A^T K A).

    A = (K + beta I - 1 1^T K / m)^(-1) (P - 1 1^T P / m),
    b = (P^T 1 - A^T K^T 1) / m.
    """
    return KernelRidgeSolver(K, beta).solve(P)


def model_outputs(model: KernelModel, X_query) -> np.ndarray:
    """Score matrix for query rows: gram(X_query, train_X) @ A + b."""
    X_query = np.asarray(X_query, dtype=np.float64)
    if X_query.ndim != 2 or X_query.shape[1] != model.train_X.shape[1]:
        raise ValueError(
            f"dimension mismatch: query has {X_query.shape[-1]} features, "
            f"model expects {model.train_X.shape[1]}"
        )
    G = gram_matrix(X_query, model.train_X, model.sigma)
    return G @ model.A + model.b


def _fmt_row(row) -> str:
    return " ".join(repr(float(v)) for v in row)


def save_model(model: KernelModel, path) -> None:
    """Versioned text serialization; floats use shortest round-trip decimals."""
    m, n = model.train_X.shape
    l = model.A.shape[1]
    lines = [MODEL_MAGIC, f"{m} {n} {l} {repr(model.sigma)}"]
    lines.extend(_fmt_row(model.train_X[i]) for i in range(m))
    lines.extend(_fmt_row(model.A[i]) for i in range(m))
    lines.append(_fmt_row(model.b))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_model(path) -> KernelModel:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != MODEL_MAGIC:
        raise ValueError(f"not a model file: expected header {MODEL_MAGIC!r}")
    head = lines[1].split()
    if len(head) != 4:
        raise ValueError("malformed model header: expected '<m> <n> <l> <sigma>'")
    m, n, l = int(head[0]), int(head[1]), int(head[2])
    sigma = float(head[3])
    if len(lines) != 2 + 2 * m + 1:
        raise ValueError(f"malformed model file: expected {2 + 2 * m + 1} lines, found {len(lines)}")

    def rows(start, count, width):
        out = np.empty((count, width))
        for i in range(count):
            vals = lines[start + i].split()
            if len(vals) != width:
                raise ValueError(f"malformed model file: bad row width at line {start + i + 1}")
            out[i] = [float(v) for v in vals]
        return out

    X = rows(2, m, n)
    A = rows(2 + m, m, l)
    b = rows(2 + 2 * m, 1, l)[0]
    return KernelModel(X, A, b, sigma)
