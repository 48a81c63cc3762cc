"""Random variate generators for the model, priors and posterior updates.

Scalar generators are thin validated wrappers over numpy's ``Generator``
methods; the matrix-variate generators (matrix normal, Wishart, inverse
Wishart) are built from the Bartlett construction so that non-integer
degrees of freedom are exact, and a univariate slice sampler covers
non-conjugate scale updates. Every function is deterministic given the
state of the :class:`~covpost.rng.RngStream` passed in.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr, ndtri

from .errors import (
    DegreesOfFreedomTooSmallError,
    DimensionMismatchError,
    NonFiniteDensityError,
    ParameterOutOfRangeError,
)
from .linalg import MatrixLike, PDMatrix, as_pd
from .rng import RngStream

# ---------------------------------------------------------------------------
# scalar samplers


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ParameterOutOfRangeError(msg)


def gamma(shape: float, scale: float, rng: RngStream, size=None):
    _require(shape > 0 and scale > 0, f"gamma needs shape, scale > 0, got ({shape}, {scale})")
    return rng.gen.gamma(shape, scale, size=size)


def inverse_gamma(shape: float, scale: float, rng: RngStream, size=None):
    """Inverse gamma with density proportional to x^(-shape-1) exp(-scale/x)."""
    _require(shape > 0 and scale > 0, f"inverse_gamma needs shape, scale > 0, got ({shape}, {scale})")
    return 1.0 / rng.gen.gamma(shape, 1.0 / scale, size=size)


def lognormal(mu: float, sigma: float, rng: RngStream, size=None):
    _require(np.isfinite(mu) and sigma > 0, f"lognormal needs finite mu, sigma > 0, got ({mu}, {sigma})")
    return rng.gen.lognormal(mu, sigma, size=size)


def uniform(lo: float, hi: float, rng: RngStream, size=None):
    _require(hi > lo, f"uniform needs hi > lo, got ({lo}, {hi})")
    return rng.gen.uniform(lo, hi, size=size)


def beta(a: float, b: float, rng: RngStream, size=None):
    _require(a > 0 and b > 0, f"beta needs a, b > 0, got ({a}, {b})")
    return rng.gen.beta(a, b, size=size)


def chi_square(df: float, rng: RngStream, size=None):
    _require(df > 0, f"chi_square needs df > 0, got {df}")
    return rng.gen.chisquare(df, size=size)


# Standardized truncation point below which the inverse-CDF route keeps
# full accuracy; beyond it the upper-tail mass underflows and we switch
# to a shifted-exponential rejection sampler (Robert, 1995).
_TN_TAIL_ALPHA = 4.0


def truncated_normal_positive(mu: float, sigma: float, rng: RngStream, size=None):
    """N(mu, sigma^2) conditioned on being positive."""
    _require(sigma > 0 and np.isfinite(mu), f"needs finite mu and sigma > 0, got ({mu}, {sigma})")
    alpha = -mu / sigma
    if size is None:
        return _tn_positive_one(mu, sigma, alpha, rng)
    out = np.empty(int(np.prod(size)) if not np.isscalar(size) else size)
    flat = out.reshape(-1)
    for i in range(flat.size):
        flat[i] = _tn_positive_one(mu, sigma, alpha, rng)
    return out


def _tn_positive_one(mu: float, sigma: float, alpha: float, rng: RngStream) -> float:
    gen = rng.gen
    if alpha <= _TN_TAIL_ALPHA:
        p0 = ndtr(alpha)
        u = gen.random()
        z = ndtri(p0 + u * (1.0 - p0))
        x = mu + sigma * z
        if x > 0:
            return float(x)
        # fall through on the rare round-off at the boundary
    lam = (alpha + np.sqrt(alpha * alpha + 4.0)) / 2.0
    while True:
        z = alpha + gen.exponential(1.0 / lam)
        if gen.random() <= np.exp(-0.5 * (z - lam) ** 2):
            return float(mu + sigma * z)


# ---------------------------------------------------------------------------
# matrix-variate samplers


def std_normal_matrix(rows: int, cols: int, rng: RngStream) -> np.ndarray:
    """Matrix of i.i.d. standard normal entries."""
    if rows < 1 or cols < 1:
        raise DimensionMismatchError(f"need rows, cols >= 1, got ({rows}, {cols})")
    return rng.gen.standard_normal((rows, cols))


def matrix_normal(M: np.ndarray, U: MatrixLike, V: MatrixLike, rng: RngStream) -> np.ndarray:
    """Draw from the matrix normal MN(M, U, V).

    The draw is M + L_U Z L_V^T with Z standard normal, so vec of the
    result has covariance V (x) U (Kronecker).
    """
    M = np.asarray(M, dtype=float)
    Upd, Vpd = as_pd(U), as_pd(V)
    if M.shape != (Upd.dim, Vpd.dim):
        raise DimensionMismatchError(
            f"mean has shape {M.shape}, expected ({Upd.dim}, {Vpd.dim})"
        )
    Z = rng.gen.standard_normal(M.shape)
    return M + Upd.chol @ Z @ Vpd.chol.T


from functools import lru_cache


@lru_cache(maxsize=64)
def _tril_cache(q: int):
    rows, cols = np.tril_indices(q, -1)
    return rows, cols, np.arange(q)


def _bartlett_lower(df: float, q: int, rng: RngStream) -> np.ndarray:
    """Lower factor A of a Wishart(df, I) draw: A_ii^2 ~ chi2(df-i+1)."""
    gen = rng.gen
    A = np.zeros((q, q))
    rows, cols, diag = _tril_cache(q)
    A[rows, cols] = gen.standard_normal(rows.size)
    A[diag, diag] = np.sqrt(gen.chisquare(df - diag))
    return A


def wishart(df: float, scale: MatrixLike, rng: RngStream) -> PDMatrix:
    """Wishart draw with E[W] = df * scale; real-valued df > q-1 supported."""
    pd = as_pd(scale)
    q = pd.dim
    if df <= q - 1:
        raise DegreesOfFreedomTooSmallError(f"wishart needs df > q-1 = {q - 1}, got {df}")
    B = pd.chol @ _bartlett_lower(df, q, rng)
    return PDMatrix(B @ B.T)


def inverse_wishart(df: float, scale: MatrixLike, rng: RngStream) -> PDMatrix:
    """Inverse Wishart draw with E[X] = scale / (df - q - 1).

    Equivalent to inverting a Wishart(df, scale^{-1}) draw, implemented with
    triangular solves so no explicit inverse is formed.
    """
    pd = as_pd(scale)
    q = pd.dim
    if df <= q - 1:
        raise DegreesOfFreedomTooSmallError(
            f"inverse_wishart needs df > q-1 = {q - 1}, got {df}"
        )
    A = _bartlett_lower(df, q, rng)
    # X = L A^{-T} A^{-1} L^T = V^T V with V = A^{-1} L^T
    V = solve_triangular(A, pd.chol.T, lower=True)
    return PDMatrix(V.T @ V)


# ---------------------------------------------------------------------------
# slice sampler

_MAX_STEP_OUT = 50


def slice_sample(
    log_density: Callable[[float], float],
    current: float,
    rng: RngStream,
    width_hint: Optional[float] = None,
    diagnostics: Optional[dict] = None,
) -> float:
    """One stepping-out/shrinkage slice transition for a positive target.

    The target has support in (0, inf); points at or below zero are treated
    as having log density -inf. ``width_hint`` defaults to the current value
    itself, which is scale free for positive targets. The transition leaves
    the target invariant, so chaining calls yields a valid MCMC chain.

    Raises
    ------
    NonFiniteDensityError
        If ``log_density(current)`` is NaN or -inf, or if the slice interval
        fails to bracket the level set after 50 expansions per side (which
        indicates a numerically improper target).
    """
    if current <= 0 or not np.isfinite(current):
        raise ParameterOutOfRangeError(f"current state must be positive, got {current}")
    w = float(width_hint) if width_hint is not None else float(current)
    if w <= 0 or not np.isfinite(w):
        raise ParameterOutOfRangeError(f"width hint must be positive, got {w}")

    def logf(x: float) -> float:
        if x <= 0:
            return -math.inf
        v = float(log_density(x))
        if math.isnan(v):
            raise NonFiniteDensityError(f"log density is NaN at x={x}")
        return v

    ly = logf(current)
    if not math.isfinite(ly):
        raise NonFiniteDensityError(f"log density not finite at current state {current}")

    gen = rng.gen
    log_u = ly + math.log1p(-gen.random())

    r = gen.random()
    left = current - r * w
    right = current + (1.0 - r) * w
    expansions = 0

    while left > 0 and logf(left) > log_u:
        left -= w
        expansions += 1
        if expansions > _MAX_STEP_OUT:
            raise NonFiniteDensityError(
                "slice interval did not bracket the target after "
                f"{_MAX_STEP_OUT} left expansions; target may be improper"
            )
    left = max(left, 0.0)
    while logf(right) > log_u:
        right += w
        expansions += 1
        if expansions > _MAX_STEP_OUT:
            raise NonFiniteDensityError(
                "slice interval did not bracket the target after "
                f"{_MAX_STEP_OUT} right expansions; target may be improper"
            )

    if diagnostics is not None:
        diagnostics["expansions"] = diagnostics.get("expansions", 0) + expansions
        diagnostics["calls"] = diagnostics.get("calls", 0) + 1

    while True:
        x = left + gen.random() * (right - left)
        if x > 0 and logf(x) > log_u:
            return float(x)
        if x < current:
            left = x
        elif x > current:
            right = x
        else:  # pragma: no cover - interval shrank to a point
            raise NonFiniteDensityError("slice interval shrank to the current point")
