"""Priors for the error covariance matrix.

Two families are provided. The diagonally scale-mixed inverse Wishart
(DSIW) family puts Sigma | Delta ~ IW(nu + q - 1, c_nu Delta) with Delta
diagonal and independent mixing densities on its entries; four named
presets cover the inverse-gamma, log-normal, truncated-normal and uniform
mixing choices from the literature. The matrix-F family replaces the
diagonal scale with a full Wishart-distributed matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln, ndtr

from . import sampling
from .errors import ParameterOutOfRangeError, UnknownPresetError
from .linalg import PDMatrix
from .rng import RngStream

GAMMA = "gamma"
LOGNORMAL = "lognormal"
TRUNCNORM_POS = "truncnorm_pos"
UNIFORM = "uniform"

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class MixingDensity:
    """One univariate mixing density with support in the positive reals.

    Parameter meaning by kind: gamma(shape=a, scale=b), lognormal(mu=a,
    sigma=b), truncnorm_pos(mu=a, sigma=b), uniform(lo=a, hi=b).
    """

    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind == GAMMA:
            if self.a <= 0 or self.b <= 0:
                raise ParameterOutOfRangeError(f"gamma mixing needs shape, scale > 0: {self}")
        elif self.kind == LOGNORMAL:
            if not math.isfinite(self.a) or self.b <= 0:
                raise ParameterOutOfRangeError(f"lognormal mixing needs sigma > 0: {self}")
        elif self.kind == TRUNCNORM_POS:
            if not math.isfinite(self.a) or self.b <= 0:
                raise ParameterOutOfRangeError(f"truncated normal mixing needs sigma > 0: {self}")
        elif self.kind == UNIFORM:
            if self.a < 0 or self.b <= self.a:
                raise ParameterOutOfRangeError(
                    f"uniform mixing needs 0 <= lo < hi: {self}"
                )
        else:
            raise ParameterOutOfRangeError(f"unknown mixing kind {self.kind!r}")

    # -- named constructors ------------------------------------------------
    @staticmethod
    def gamma(shape: float, scale: float) -> "MixingDensity":
        return MixingDensity(GAMMA, shape, scale)

    @staticmethod
    def lognormal(mu: float, sigma: float) -> "MixingDensity":
        return MixingDensity(LOGNORMAL, mu, sigma)

    @staticmethod
    def truncnorm_pos(mu: float, sigma: float) -> "MixingDensity":
        return MixingDensity(TRUNCNORM_POS, mu, sigma)

    @staticmethod
    def uniform(lo: float, hi: float) -> "MixingDensity":
        return MixingDensity(UNIFORM, lo, hi)

    # ----------------------------------------------------------------------
    def log_density(self, x: float) -> float:
        """Exact log density at x > 0 (-inf outside the support)."""
        if x <= 0 or not math.isfinite(x):
            if x <= 0:
                return -math.inf
            raise ParameterOutOfRangeError(f"x must be finite and positive, got {x}")
        if self.kind == GAMMA:
            a, scale = self.a, self.b
            return (a - 1.0) * math.log(x) - x / scale - a * math.log(scale) - float(gammaln(a))
        if self.kind == LOGNORMAL:
            mu, sigma = self.a, self.b
            z = (math.log(x) - mu) / sigma
            return -math.log(x) - math.log(sigma) - _LOG_SQRT_2PI - 0.5 * z * z
        if self.kind == TRUNCNORM_POS:
            mu, sigma = self.a, self.b
            z = (x - mu) / sigma
            log_mass = math.log(float(ndtr(mu / sigma)))
            return -math.log(sigma) - _LOG_SQRT_2PI - 0.5 * z * z - log_mass
        # uniform
        lo, hi = self.a, self.b
        if lo <= x <= hi:
            return -math.log(hi - lo)
        return -math.inf

    def sample(self, rng: RngStream, size=None):
        if self.kind == GAMMA:
            return sampling.gamma(self.a, self.b, rng, size=size)
        if self.kind == LOGNORMAL:
            return sampling.lognormal(self.a, self.b, rng, size=size)
        if self.kind == TRUNCNORM_POS:
            return sampling.truncated_normal_positive(self.a, self.b, rng, size=size)
        return sampling.uniform(self.a, self.b, rng, size=size)

    @property
    def is_gamma(self) -> bool:
        return self.kind == GAMMA


def log_mixing_density(spec: MixingDensity, x: float) -> float:
    return spec.log_density(x)


def check_tail_monotone(spec: MixingDensity, k: float, grid_size: int = 200) -> bool:
    """True iff the density is non-increasing on a log grid over [k, 1e6 k]."""
    if k <= 0:
        raise ParameterOutOfRangeError(f"k must be positive, got {k}")
    grid = np.geomspace(k, 1e6 * k, grid_size)
    vals = np.array([spec.log_density(float(x)) for x in grid])
    prev = vals[0]
    for v in vals[1:]:
        if v > prev + 1e-9:
            return False
        prev = v
    return True


@dataclass(frozen=True)
class DsiwPrior:
    """Diagonally scale-mixed inverse Wishart prior.

    Sigma | Delta ~ IW(nu + q - 1, c_nu Delta), Delta = diag(delta_1..q)
    with independent mixing densities on each delta_i.
    """

    nu: float
    c_nu: float
    mixing: Tuple[MixingDensity, ...]
    name: str = "DSIW"

    def __post_init__(self):
        if self.nu <= 0:
            raise ParameterOutOfRangeError(f"nu must be positive, got {self.nu}")
        if self.c_nu <= 0:
            raise ParameterOutOfRangeError(f"c_nu must be positive, got {self.c_nu}")
        if len(self.mixing) == 0:
            raise ParameterOutOfRangeError("need at least one mixing density")
        object.__setattr__(self, "mixing", tuple(self.mixing))

    @property
    def q(self) -> int:
        return len(self.mixing)


@dataclass(frozen=True)
class MatrixFPrior:
    """Matrix-F prior: Sigma | Dbar ~ IW(nu + q - 1, Dbar), Dbar ~ W(nu_q_star, psi)."""

    nu: float
    nu_q_star: float
    psi: PDMatrix
    name: str = "MATRIX_F"

    def __post_init__(self):
        if self.nu <= 0:
            raise ParameterOutOfRangeError(f"nu must be positive, got {self.nu}")
        if self.nu_q_star <= self.q - 1:
            raise ParameterOutOfRangeError(
                f"nu_q_star must exceed q-1 = {self.q - 1}, got {self.nu_q_star}"
            )

    @property
    def q(self) -> int:
        return self.psi.dim


Prior = Union[DsiwPrior, MatrixFPrior]

IG_DSIW = "IG_DSIW"
LN_DSIW = "LN_DSIW"
TN_DSIW = "TN_DSIW"
U_DSIW = "U_DSIW"
MATRIX_F = "MATRIX_F"
PRESET_NAMES = (IG_DSIW, LN_DSIW, TN_DSIW, U_DSIW, MATRIX_F)


def _per_coord(value, q: int, what: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (q,)).copy()
    if not np.all(np.isfinite(arr)):
        raise ParameterOutOfRangeError(f"{what} must be finite")
    return arr


def preset(name: str, q: int, **overrides) -> Prior:
    """Build a named prior preset for dimension q.

    Defaults: IG_DSIW uses nu=2, c_nu=2*nu and Gamma(1/2, A_i^2) mixing with
    A_i=10; LN_DSIW and TN_DSIW use nu=2, c_nu=1 with LogNormal(0, 1) and
    positive-truncated Normal(0, 10) mixing; U_DSIW uses nu=2, c_nu=1 with
    Uniform(0, 100) mixing; MATRIX_F uses nu=1, nu_q_star=q, psi=I. Any
    default can be overridden by keyword (scalars or per-coordinate arrays
    for the mixing parameters).
    """
    if q < 1:
        raise ParameterOutOfRangeError(f"q must be >= 1, got {q}")
    key = str(name).strip().upper().replace("-", "_")
    if key not in PRESET_NAMES:
        raise UnknownPresetError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")

    ov = dict(overrides)
    if key == MATRIX_F:
        nu = float(ov.pop("nu", 1.0))
        nu_q_star = float(ov.pop("nu_q_star", q))
        psi = ov.pop("psi", None)
        if ov:
            raise ParameterOutOfRangeError(f"unknown overrides for {key}: {sorted(ov)}")
        psi_pd = PDMatrix.identity(q) if psi is None else (
            psi if isinstance(psi, PDMatrix) else PDMatrix(np.asarray(psi))
        )
        if psi_pd.dim != q:
            raise ParameterOutOfRangeError(f"psi has dim {psi_pd.dim}, expected {q}")
        return MatrixFPrior(nu=nu, nu_q_star=nu_q_star, psi=psi_pd, name=key)

    nu = float(ov.pop("nu", 2.0))
    if key == IG_DSIW:
        c_nu = float(ov.pop("c_nu", 2.0 * nu))
        A = _per_coord(ov.pop("A", 10.0), q, "A")
        mixing = tuple(MixingDensity.gamma(0.5, float(a * a)) for a in A)
    elif key == LN_DSIW:
        c_nu = float(ov.pop("c_nu", 1.0))
        mu = _per_coord(ov.pop("mu", 0.0), q, "mu")
        sigma = _per_coord(ov.pop("sigma", 1.0), q, "sigma")
        mixing = tuple(MixingDensity.lognormal(float(m), float(s)) for m, s in zip(mu, sigma))
    elif key == TN_DSIW:
        c_nu = float(ov.pop("c_nu", 1.0))
        mu = _per_coord(ov.pop("mu", 0.0), q, "mu")
        sigma = _per_coord(ov.pop("sigma", 10.0), q, "sigma")
        mixing = tuple(MixingDensity.truncnorm_pos(float(m), float(s)) for m, s in zip(mu, sigma))
    else:  # U_DSIW
        c_nu = float(ov.pop("c_nu", 1.0))
        lo = _per_coord(ov.pop("lo", 0.0), q, "lo")
        hi = _per_coord(ov.pop("hi", 100.0), q, "hi")
        mixing = tuple(MixingDensity.uniform(float(a), float(b)) for a, b in zip(lo, hi))
    if ov:
        raise ParameterOutOfRangeError(f"unknown overrides for {key}: {sorted(ov)}")
    return DsiwPrior(nu=nu, c_nu=c_nu, mixing=mixing, name=key)
