"""Dense symmetric positive-definite linear algebra.

Plain ``numpy.ndarray`` values are used for general (rectangular) matrices;
:class:`PDMatrix` wraps a symmetric positive-definite square matrix and
caches its Cholesky factor, since the same matrix is typically factored,
solved against and log-determined repeatedly inside a Gibbs sweep.

All functions are pure; ``PDMatrix`` is immutable after construction and
safe to share between threads.
"""

from __future__ import annotations

from typing import Union

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatchError, NotPositiveDefiniteError

# Relative asymmetry tolerated before construction fails instead of
# silently symmetrizing something that is not a covariance-like matrix.
_SYM_RTOL = 1e-12

# Pivots below this absolute threshold are treated as a PD failure even
# when LAPACK's potrf succeeds.
_PIVOT_FLOOR = 1e-300

MatrixLike = Union[np.ndarray, "PDMatrix"]


class PDMatrix:
    """Symmetric positive-definite matrix with a lazily cached Cholesky factor.

    Parameters
    ----------
    entries : ndarray, shape (q, q)
        Approximately symmetric matrix. Asymmetry beyond ``1e-12`` relative
        (max-abs) raises ``ValueError``; smaller round-off is removed by
        averaging with the transpose. No jitter is ever added: if the
        symmetrized matrix is not positive definite, the first factorization
        raises :class:`NotPositiveDefiniteError` so callers see sampler bugs
        instead of silently regularized output.
    """

    __slots__ = ("entries", "_chol")

    def __init__(self, entries: np.ndarray):
        m = np.asarray(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] == 0:
            raise DimensionMismatchError("empty matrix is not positive definite")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        scale = np.abs(m).max()
        asym = np.abs(m - m.T).max()
        if asym > _SYM_RTOL * max(scale, 1.0):
            raise ValueError(
                f"matrix is not symmetric: max |m - m.T| = {asym:.3e} "
                f"exceeds {_SYM_RTOL:.0e} relative"
            )
        sym = (m + m.T) / 2.0
        sym.flags.writeable = False
        object.__setattr__(self, "entries", sym)
        object.__setattr__(self, "_chol", None)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("PDMatrix is immutable")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def chol(self) -> np.ndarray:
        """Lower-triangular factor L with L @ L.T equal to ``entries``."""
        if self._chol is None:
            try:
                L = np.linalg.cholesky(self.entries)
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefiniteError(str(exc)) from exc
            if np.any(L.diagonal() ** 2 <= _PIVOT_FLOOR):
                raise NotPositiveDefiniteError(
                    f"Cholesky pivot below {_PIVOT_FLOOR:g}; matrix is numerically singular"
                )
            L.flags.writeable = False
            object.__setattr__(self, "_chol", L)
        return self._chol

    def __repr__(self) -> str:
        return f"PDMatrix(dim={self.dim})"

    @staticmethod
    def identity(q: int) -> "PDMatrix":
        return PDMatrix(np.eye(q))


def as_pd(m: MatrixLike) -> PDMatrix:
    """Coerce an array or PDMatrix to PDMatrix."""
    return m if isinstance(m, PDMatrix) else PDMatrix(np.asarray(m))


def cholesky(m: MatrixLike) -> np.ndarray:
    """Lower-triangular Cholesky factor of a PD matrix.

    Raises :class:`NotPositiveDefiniteError` when a pivot is non-positive,
    which is the package-wide signal for an invalid covariance input.
    """
    return as_pd(m).chol


def spectral_norm(m: np.ndarray) -> float:
    """Largest singular value of ``m`` (operator 2-norm).

    Computed by a full dense decomposition rather than power iteration:
    deterministic and accurate to ~1e-8 relative at the dimensions used
    here (a few hundred at most). Symmetric inputs go through the
    symmetric eigensolver, general inputs through singular values.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got ndim={a.ndim}")
    if a.size == 0:
        return 0.0
    if a.shape[0] == a.shape[1] and np.array_equal(a, a.T):
        return float(np.abs(np.linalg.eigvalsh(a)).max())
    return float(np.linalg.svd(a, compute_uv=False)[0])


def eigvals_sym(m: MatrixLike) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending."""
    ent = m.entries if isinstance(m, PDMatrix) else np.asarray(m, dtype=float)
    return np.linalg.eigvalsh(ent)


def logdet_pd(m: MatrixLike) -> float:
    """log |m| for PD ``m`` via the Cholesky diagonal (2 sum log L_ii)."""
    L = as_pd(m).chol
    return float(2.0 * np.sum(np.log(L.diagonal())))


def solve_pd(m: MatrixLike, rhs: np.ndarray) -> np.ndarray:
    """Solve m @ X = rhs for PD ``m`` using its Cholesky factor."""
    pd = as_pd(m)
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != pd.dim:
        raise DimensionMismatchError(
            f"rhs has {b.shape[0]} rows, matrix has dimension {pd.dim}"
        )
    L = pd.chol
    y = solve_triangular(L, b, lower=True)
    return solve_triangular(L.T, y, lower=False)


def inv_pd(m: MatrixLike) -> np.ndarray:
    """Dense inverse of a PD matrix (symmetrized)."""
    pd = as_pd(m)
    inv = solve_pd(pd, np.eye(pd.dim))
    return (inv + inv.T) / 2.0


def diag_of_inverse(m: MatrixLike) -> np.ndarray:
    """Diagonal of m^{-1} without forming the full inverse.

    With m = L L^T, the diagonal of m^{-1} equals the column-wise squared
    norms of L^{-1}.
    """
    pd = as_pd(m)
    Linv = solve_triangular(pd.chol, np.eye(pd.dim), lower=True)
    return np.sum(Linv * Linv, axis=0)


def schur_det_identity_check(
    S: MatrixLike, delta1: float, rest: np.ndarray, rtol: float = 1e-8
) -> bool:
    """Check the first-pivot Schur-complement determinant factorization.

    For PD ``S`` of dimension q >= 2 and a positive diagonal perturbation
    Delta = diag(delta1, rest), verifies

        |S + Delta| = (s11 + delta1) * |C - u u^T / (s11 + delta1)|

    where u = S[1:, 0] and C = S[1:, 1:] + diag(rest). Returns whether both
    sides agree to ``rtol`` relative, comparing in log space for stability.
    """
    pd = as_pd(S)
    q = pd.dim
    rest = np.asarray(rest, dtype=float)
    if q < 2:
        raise DimensionMismatchError("Schur split needs dimension >= 2")
    if rest.shape != (q - 1,):
        raise DimensionMismatchError(
            f"rest must have length q-1={q - 1}, got shape {rest.shape}"
        )
    if delta1 <= 0 or np.any(rest <= 0):
        raise ValueError("diagonal perturbation must be strictly positive")

    delta = np.concatenate(([delta1], rest))
    lhs_sign, lhs_log = np.linalg.slogdet(pd.entries + np.diag(delta))

    s11 = pd.entries[0, 0]
    u = pd.entries[1:, 0]
    C = pd.entries[1:, 1:] + np.diag(rest)
    comp = C - np.outer(u, u) / (s11 + delta1)
    rhs_sign, rhs_log = np.linalg.slogdet(comp)
    rhs_log = rhs_log + np.log(s11 + delta1)

    if lhs_sign <= 0 or rhs_sign <= 0:
        return False
    return abs(lhs_log - rhs_log) <= rtol * max(1.0, abs(lhs_log))
