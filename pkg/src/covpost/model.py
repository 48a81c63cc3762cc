"""Multi-response Gaussian regression model: data, sufficient statistics,
and the algebraic identities connecting them.

The model is Y = X B + E with E rows i.i.d. N(0, Sigma). A dataset with no
design matrix encodes the plain i.i.d. covariance-estimation setting (p = 0),
in which case the cross-product statistic reduces to Y'Y.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    ParameterOutOfRangeError,
    SingularDesignError,
)
from .linalg import PDMatrix, eigvals_sym, solve_pd


@dataclass(frozen=True)
class Dataset:
    """Observed responses and optional design matrix.

    ``X is None`` encodes the i.i.d. setting: rows of Y are modelled as
    mean-zero with common covariance.
    """

    Y: np.ndarray
    X: Optional[np.ndarray] = None

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        object.__setattr__(self, "Y", Y)
        if Y.ndim != 2:
            raise DimensionMismatchError(f"Y must be 2-d, got ndim={Y.ndim}")
        if Y.shape[0] < 2:
            raise DimensionMismatchError("need at least 2 observations")
        if not np.all(np.isfinite(Y)):
            raise ValueError("Y entries must be finite")
        if self.X is not None:
            X = np.asarray(self.X, dtype=float)
            object.__setattr__(self, "X", X)
            if X.ndim != 2 or X.shape[0] != Y.shape[0]:
                raise DimensionMismatchError(
                    f"X rows {X.shape} must match Y rows {Y.shape[0]}"
                )
            if not np.all(np.isfinite(X)):
                raise ValueError("X entries must be finite")

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def q(self) -> int:
        return self.Y.shape[1]

    @property
    def p(self) -> int:
        return 0 if self.X is None else self.X.shape[1]


@dataclass(frozen=True)
class TrueParams:
    """True data-generating parameters for simulation studies.

    ``sigma0`` must be well conditioned: all eigenvalues within
    [k_sigma, 1/k_sigma].
    """

    sigma0: PDMatrix
    b0: Optional[np.ndarray] = None
    k_sigma: float = 0.5
    sigma0_subg: float = 1.0

    def __post_init__(self):
        if not (0 < self.k_sigma <= 1):
            raise ParameterOutOfRangeError(f"k_sigma must be in (0, 1], got {self.k_sigma}")
        if self.sigma0_subg <= 0:
            raise ParameterOutOfRangeError("sigma0_subg must be positive")
        eigs = eigvals_sym(self.sigma0)
        tol = 1e-10 * max(1.0, eigs[-1])
        if eigs[0] < self.k_sigma - tol or eigs[-1] > 1.0 / self.k_sigma + tol:
            raise ParameterOutOfRangeError(
                f"sigma0 eigenvalues [{eigs[0]:.4g}, {eigs[-1]:.4g}] violate "
                f"[{self.k_sigma}, {1.0 / self.k_sigma}]"
            )


@dataclass(frozen=True)
class SufficientStats:
    """Everything the conditional posteriors need from one dataset.

    s_y is the ridge residual cross-product Y'(I - X (X'X + lam I)^{-1} X')Y,
    w_n the plain least-squares residual cross-product, and b_tilde / b_ls
    the ridge and least-squares coefficient estimates. For p = 0 only s_y is
    populated (equal to Y'Y).
    """

    s_y: PDMatrix
    n: int
    p: int
    q: int
    lam: float
    x_lambda: Optional[PDMatrix] = None
    b_tilde: Optional[np.ndarray] = None
    w_n: Optional[PDMatrix] = None
    b_ls: Optional[np.ndarray] = None


def compute_stats(d: Dataset, lam: float = 0.0) -> SufficientStats:
    """Precompute regression statistics for a dataset.

    With a design matrix, X_lambda = X'X + lam I_p (identity of size p for
    dimensional consistency), b_tilde = X_lambda^{-1} X'Y and s_y the
    corresponding residual cross-product. Least-squares quantities (w_n,
    b_ls) are filled only when X'X is invertible.
    """
    if lam < 0:
        raise ParameterOutOfRangeError(f"lambda must be nonnegative, got {lam}")
    Y = d.Y
    n, q = Y.shape
    if d.X is None:
        s_y = _pd_cross(Y.T @ Y, "Y'Y")
        return SufficientStats(s_y=s_y, n=n, p=0, q=q, lam=float(lam))

    X = d.X
    p = X.shape[1]
    xtx = X.T @ X
    xty = X.T @ Y
    try:
        x_lambda = PDMatrix(_sym(xtx + lam * np.eye(p)))
        x_lambda.chol
    except NotPositiveDefiniteError as exc:
        raise SingularDesignError(
            f"X'X + lambda I is singular at lambda={lam}; increase lambda"
        ) from exc
    b_tilde = solve_pd(x_lambda, xty)
    s_y = _pd_cross(Y.T @ Y - xty.T @ b_tilde, "ridge residual cross-product")

    w_n = None
    b_ls = None
    try:
        xtx_pd = PDMatrix(_sym(xtx))
        xtx_pd.chol
    except (NotPositiveDefiniteError, ValueError):
        xtx_pd = None
    if xtx_pd is not None:
        b_ls = solve_pd(xtx_pd, xty)
        try:
            w_n = _pd_cross(Y.T @ Y - xty.T @ b_ls, "least-squares residual")
        except NotPositiveDefiniteError:
            w_n = None  # rank-deficient residual when n - p < q
    return SufficientStats(
        s_y=s_y, n=n, p=p, q=q, lam=float(lam),
        x_lambda=x_lambda, b_tilde=b_tilde, w_n=w_n, b_ls=b_ls,
    )


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def _pd_cross(m: np.ndarray, what: str) -> PDMatrix:
    pd = PDMatrix(_sym(m))
    try:
        pd.chol
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(f"{what} is not positive definite: {exc}") from exc
    return pd


def woodbury_check(s: SufficientStats, rtol: float = 1e-8) -> bool:
    """Verify s_y = w_n + b_ls' (lam^{-1} I + (X'X)^{-1})^{-1} b_ls.

    This is the Woodbury decomposition of the ridge residual cross-product
    into the least-squares residual plus a coefficient shrinkage term.
    """
    if s.p == 0 or s.x_lambda is None:
        raise SingularDesignError("woodbury_check requires a design matrix (p >= 1)")
    if s.b_ls is None or s.w_n is None:
        raise SingularDesignError("woodbury_check requires invertible X'X")
    if s.lam <= 0:
        raise SingularDesignError("woodbury_check requires lambda > 0")
    xtx = PDMatrix(_sym(s.x_lambda.entries - s.lam * np.eye(s.p)))
    middle = PDMatrix(_sym(np.eye(s.p) / s.lam + solve_pd(xtx, np.eye(s.p))))
    rhs = s.w_n.entries + s.b_ls.T @ solve_pd(middle, s.b_ls)
    lhs = s.s_y.entries
    scale = max(np.abs(lhs).max(), 1e-300)
    return bool(np.abs(lhs - rhs).max() <= rtol * scale)


def loglik(d: Dataset, B: Optional[np.ndarray], Sigma: PDMatrix) -> float:
    """Exact matrix-normal log likelihood of Y given mean X B and row-iid
    noise with covariance Sigma (B is ignored when the dataset has no X)."""
    n, q = d.Y.shape
    if Sigma.dim != q:
        raise DimensionMismatchError(f"Sigma has dim {Sigma.dim}, expected {q}")
    if d.X is None:
        resid = d.Y
    else:
        B = np.asarray(B, dtype=float)
        if B.shape != (d.p, q):
            raise DimensionMismatchError(f"B has shape {B.shape}, expected ({d.p}, {q})")
        resid = d.Y - d.X @ B
    half = solve_triangular(Sigma.chol, resid.T, lower=True)
    quad = float(np.sum(half * half))
    logdet = 2.0 * float(np.sum(np.log(Sigma.chol.diagonal())))
    return -0.5 * (n * q * np.log(2.0 * np.pi) + n * logdet + quad)


# ---------------------------------------------------------------------------
# CSV interchange: header y1..yq[,x1..xp], one row per observation,
# values written with shortest round-trip decimal formatting.

_HEADER_RE = re.compile(r"^(y|x)(\d+)$")


def dataset_to_csv(d: Dataset, path) -> None:
    header = [f"y{j + 1}" for j in range(d.q)] + [f"x{j + 1}" for j in range(d.p)]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(d.n):
            row = [repr(float(v)) for v in d.Y[i]]
            if d.X is not None:
                row += [repr(float(v)) for v in d.X[i]]
            fh.write(",".join(row) + "\n")


def dataset_from_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        q, p = _parse_header(header, path)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != q + p:
                raise ValueError(
                    f"{path}:{lineno}: expected {q + p} columns, got {len(rec)}"
                )
            try:
                rows.append([float(v) for v in rec])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, got {len(rows)}")
    data = np.asarray(rows)
    Y = data[:, :q]
    X = data[:, q:] if p > 0 else None
    return Dataset(Y=Y, X=X)


def _parse_header(header, path) -> tuple[int, int]:
    names = [h.strip() for h in header]
    q = 0
    while q < len(names) and names[q] == f"y{q + 1}":
        q += 1
    p = 0
    while q + p < len(names) and names[q + p] == f"x{p + 1}":
        p += 1
    if q == 0 or q + p != len(names):
        raise ValueError(
            f"{path}:1: header must be y1..yq[,x1..xp], got {','.join(names)}"
        )
    return q, p
