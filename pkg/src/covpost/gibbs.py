"""Gibbs samplers for the covariance posterior under DSIW and matrix-F priors.

Each sweep alternates (i) an inverse-Wishart update of Sigma given the scale
state, (ii) the scale update (per-coordinate for the diagonal mixture, a
single Wishart draw for the matrix-F case), and optionally (iii) a matrix
normal draw of the coefficient matrix. The coefficient draw feeds no other
conditional, so it is taken only on kept iterations (exact collapsed Gibbs
on the (Sigma, scale) sub-chain).

One chain is strictly sequential; independent chains own independent
RngStreams and can run in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyChainError,
    ParameterOutOfRangeError,
    PreconditionError,
)
from .linalg import PDMatrix, diag_of_inverse, inv_pd, spectral_norm
from .model import SufficientStats
from .priors import DsiwPrior, MatrixFPrior, MixingDensity, Prior
from .rng import RngStream
from .sampling import inverse_wishart, matrix_normal, slice_sample, wishart


@dataclass(frozen=True)
class ChainConfig:
    """MCMC schedule: total iterations, burn-in, thinning, and RNG identity."""

    iterations: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    stream_id: int = 0
    sample_b: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ParameterOutOfRangeError("iterations must be >= 1")
        if not (0 <= self.burn_in < self.iterations):
            raise ParameterOutOfRangeError("need 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ParameterOutOfRangeError("thin must be >= 1")
        if self.kept < 1:
            raise ParameterOutOfRangeError("schedule keeps no draws")

    @property
    def kept(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class PosteriorSamples:
    """Thinned post-burn-in draws with chain metadata.

    Exactly one of ``delta`` (DSIW, shape kept x q) and ``delta_bar``
    (matrix-F, shape kept x q x q) is populated.
    """

    sigma: np.ndarray
    config: ChainConfig
    delta: Optional[np.ndarray] = None
    delta_bar: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return self.sigma.shape[0]

    @property
    def q(self) -> int:
        return self.sigma.shape[1]


# ---------------------------------------------------------------------------
# the per-coordinate scale conditional under a DSIW prior


def delta_conditional_logpdf(
    mix: MixingDensity, nu: float, q: int, c_nu: float, sigma_inv_i: float
) -> Callable[[float], float]:
    """Unnormalized log conditional of one diagonal scale entry given Sigma.

    Proportional to exp(-c_nu (Sigma^{-1})_i x / 2) * x^((nu+q-1)/2) * pi_i(x).
    """
    exponent = 0.5 * (nu + q - 1.0)
    rate = 0.5 * c_nu * sigma_inv_i

    def logf(x: float) -> float:
        if x <= 0:
            return -np.inf
        return -rate * x + exponent * np.log(x) + mix.log_density(x)

    return logf


def _fast_delta_logf(mix: MixingDensity, rate: float, half_exp: float):
    """Hot-loop variant of the scale conditional log density.

    Additive constants are dropped (slice sampling only compares levels
    within one call) and scalar math avoids array dispatch.
    """
    from .priors import LOGNORMAL, TRUNCNORM_POS, UNIFORM

    if mix.kind == LOGNORMAL:
        mu, sig = mix.a, mix.b
        e = half_exp - 1.0
        inv2s2 = 0.5 / (sig * sig)

        def logf(x: float, _log=math.log) -> float:
            lx = _log(x)
            d = lx - mu
            return -rate * x + e * lx - d * d * inv2s2

        return logf
    if mix.kind == TRUNCNORM_POS:
        mu, sig = mix.a, mix.b
        inv2s2 = 0.5 / (sig * sig)

        def logf(x: float, _log=math.log) -> float:
            d = x - mu
            return -rate * x + half_exp * _log(x) - d * d * inv2s2

        return logf
    if mix.kind == UNIFORM:
        lo, hi = mix.a, mix.b

        def logf(x: float, _log=math.log) -> float:
            if x < lo or x > hi:
                return -math.inf
            return -rate * x + half_exp * _log(x)

        return logf

    def logf(x: float, _log=math.log) -> float:
        return -rate * x + half_exp * _log(x) + mix.log_density(x)

    return logf


def delta_conditional_gamma(
    mix: MixingDensity, nu: float, q: int, c_nu: float, sigma_inv_i: float
) -> Tuple[float, float]:
    """Closed-form (shape, rate) of the scale conditional for gamma mixing.

    Gamma(a, theta) mixing tilts to Gamma(a + (nu+q-1)/2,
    rate 1/theta + c_nu (Sigma^{-1})_i / 2).
    """
    if not mix.is_gamma:
        raise PreconditionError("closed-form update requires gamma mixing")
    shape = mix.a + 0.5 * (nu + q - 1.0)
    rate = 1.0 / mix.b + 0.5 * c_nu * sigma_inv_i
    return shape, rate


# ---------------------------------------------------------------------------
# samplers


def _check_stats_prior(stats: SufficientStats, prior: Prior) -> None:
    if stats.q != prior.q:
        raise DimensionMismatchError(
            f"stats have q={stats.q} responses but prior has q={prior.q}"
        )


def _b_step_setup(stats: SufficientStats):
    if stats.p == 0 or stats.x_lambda is None or stats.b_tilde is None:
        raise PreconditionError("sampling B requires a dataset with a design matrix")
    return PDMatrix(inv_pd(stats.x_lambda)), stats.b_tilde


def gibbs_dsiw(
    stats: SufficientStats,
    prior: DsiwPrior,
    cfg: ChainConfig,
    freeze_delta: Optional[np.ndarray] = None,
) -> PosteriorSamples:
    """Gibbs chain for the DSIW posterior.

    Sweep order is Sigma, then Delta, then (optionally) B. Coordinates with
    gamma mixing use the conjugate gamma update; all others take one slice
    transition per sweep. Passing ``freeze_delta`` pins the diagonal scale
    at a fixed vector and skips its update (diagnostic mode: the Sigma draws
    are then exact i.i.d. inverse Wishart).
    """
    _check_stats_prior(stats, prior)
    q, n = stats.q, stats.n
    nu, c_nu = prior.nu, prior.c_nu
    df = nu + q + n - 1.0
    s_y = stats.s_y.entries

    rng = RngStream(cfg.seed, cfg.stream_id)
    if freeze_delta is not None:
        delta = np.asarray(freeze_delta, dtype=float).copy()
        if delta.shape != (q,) or np.any(delta <= 0):
            raise ParameterOutOfRangeError("freeze_delta must be a positive vector of length q")
    else:
        delta = np.ones(q)

    b_row_cov = b_mean = None
    if cfg.sample_b:
        b_row_cov, b_mean = _b_step_setup(stats)

    kept = cfg.kept
    sig_out = np.empty((kept, q, q))
    del_out = np.empty((kept, q))
    b_out = np.empty((kept, stats.p, q)) if cfg.sample_b else None
    diag = {"expansions": 0, "calls": 0}

    half_exp = 0.5 * (nu + q - 1.0)
    j = 0
    for it in range(cfg.iterations):
        scale = PDMatrix(s_y + c_nu * np.diag(delta))
        sigma = inverse_wishart(df, scale, rng)

        if freeze_delta is None:
            sigma_inv_diag = diag_of_inverse(sigma)
            for i, mix in enumerate(prior.mixing):
                rate = 0.5 * c_nu * sigma_inv_diag[i]
                if mix.is_gamma:
                    delta[i] = rng.gen.gamma(mix.a + half_exp, 1.0 / (1.0 / mix.b + rate))
                else:
                    logf = _fast_delta_logf(mix, rate, half_exp)
                    # width at the scale of the gamma envelope of the target,
                    # not the current point, so step-out brackets wide slices
                    width = max(delta[i], (half_exp + 1.0) / rate)
                    delta[i] = slice_sample(logf, delta[i], rng, width_hint=width, diagnostics=diag)

        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == cfg.thin - 1:
            sigma.chol  # re-validate positive definiteness of the stored draw
            sig_out[j] = sigma.entries
            del_out[j] = delta
            if cfg.sample_b:
                b_out[j] = matrix_normal(b_mean, b_row_cov, sigma, rng)
            j += 1

    assert j == kept
    return PosteriorSamples(sigma=sig_out, delta=del_out, b=b_out, config=cfg, diagnostics=diag)


def gibbs_matrixf(
    stats: SufficientStats,
    prior: MatrixFPrior,
    cfg: ChainConfig,
    freeze_delta_bar: Optional[np.ndarray] = None,
) -> PosteriorSamples:
    """Gibbs chain for the matrix-F posterior.

    Both conditionals are standard: Sigma given Dbar is inverse Wishart and
    Dbar given Sigma is Wishart with scale (Sigma^{-1} + psi^{-1})^{-1}.
    ``freeze_delta_bar`` pins the Wishart scale state (diagnostic mode).
    """
    _check_stats_prior(stats, prior)
    q, n = stats.q, stats.n
    nu = prior.nu
    df_sigma = nu + q + n - 1.0
    df_mix = nu + prior.nu_q_star + q - 1.0
    s_y = stats.s_y.entries
    psi_inv = inv_pd(prior.psi)

    rng = RngStream(cfg.seed, cfg.stream_id)
    if freeze_delta_bar is not None:
        dbar = PDMatrix(np.asarray(freeze_delta_bar, dtype=float))
        if dbar.dim != q:
            raise DimensionMismatchError("freeze_delta_bar must be q x q")
        dbar_entries = dbar.entries
    else:
        dbar_entries = np.eye(q)

    b_row_cov = b_mean = None
    if cfg.sample_b:
        b_row_cov, b_mean = _b_step_setup(stats)

    kept = cfg.kept
    sig_out = np.empty((kept, q, q))
    dbar_out = np.empty((kept, q, q))
    b_out = np.empty((kept, stats.p, q)) if cfg.sample_b else None

    j = 0
    for it in range(cfg.iterations):
        sigma = inverse_wishart(df_sigma, PDMatrix(s_y + dbar_entries), rng)

        if freeze_delta_bar is None:
            sigma_inv = inv_pd(sigma)
            mix_scale = PDMatrix(inv_pd(PDMatrix(sigma_inv + psi_inv)))
            dbar_entries = wishart(df_mix, mix_scale, rng).entries

        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == cfg.thin - 1:
            sigma.chol
            sig_out[j] = sigma.entries
            dbar_out[j] = dbar_entries
            if cfg.sample_b:
                b_out[j] = matrix_normal(b_mean, b_row_cov, sigma, rng)
            j += 1

    assert j == kept
    return PosteriorSamples(sigma=sig_out, delta_bar=dbar_out, b=b_out, config=cfg)


# ---------------------------------------------------------------------------
# posterior summaries


def posterior_mean_sigma(
    samples: PosteriorSamples,
    stats: SufficientStats,
    prior: Prior,
    rao_blackwell: bool = True,
) -> PDMatrix:
    """Posterior mean of Sigma from kept draws.

    The Rao-Blackwellized form averages the analytic conditional means
    (s_y + c_nu Delta^(i)) / (n + nu - 2) instead of the raw draws, which
    removes the inverse-Wishart sampling noise.
    """
    if samples.count < 1:
        raise EmptyChainError("no kept draws")
    if not rao_blackwell:
        return PDMatrix(_sym(samples.sigma.mean(axis=0)))
    denom = stats.n + prior.nu - 2.0
    if denom <= 0:
        raise ParameterOutOfRangeError("posterior mean needs n + nu > 2")
    if samples.delta is not None:
        c_nu = prior.c_nu if isinstance(prior, DsiwPrior) else 1.0
        scale_mean = stats.s_y.entries + c_nu * np.diag(samples.delta.mean(axis=0))
    elif samples.delta_bar is not None:
        scale_mean = stats.s_y.entries + samples.delta_bar.mean(axis=0)
    else:
        raise EmptyChainError("samples carry no scale draws")
    return PDMatrix(_sym(scale_mean / denom))


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def tail_probability(samples: PosteriorSamples, sigma0: PDMatrix, threshold: float) -> float:
    """Fraction of kept draws farther than ``threshold`` from sigma0 in
    spectral norm."""
    if sigma0.dim != samples.q:
        raise DimensionMismatchError(
            f"sigma0 has dim {sigma0.dim}, draws have q={samples.q}"
        )
    if threshold <= 0:
        raise ParameterOutOfRangeError("threshold must be positive")
    devs = np.abs(np.linalg.eigvalsh(samples.sigma - sigma0.entries)).max(axis=1)
    return float(np.mean(devs > threshold))


def effective_sample_size(x: np.ndarray) -> float:
    """ESS via Geyer's initial positive sequence on the autocorrelation."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        return float(n)
    xc = x - x.mean()
    var = float(xc @ xc) / n
    if var <= 0:
        return float(n)
    acov = np.correlate(xc, xc, mode="full")[n - 1:] / n
    rho = acov / var
    s = 0.0
    k = 1
    while k + 1 < n:
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        s += pair
        k += 2
    return float(min(n, max(1.0, n / (1.0 + 2.0 * s))))


def dump_chain_csv(samples: PosteriorSamples, path) -> None:
    """Write kept draws to CSV: iteration index, upper triangle of Sigma
    (row-major), then the scale state (vector or upper triangle)."""
    q = samples.q
    iu = np.triu_indices(q)
    cols = ["iter"] + [f"sigma_{i + 1}_{j + 1}" for i, j in zip(*iu)]
    if samples.delta is not None:
        cols += [f"delta_{i + 1}" for i in range(q)]
    elif samples.delta_bar is not None:
        cols += [f"dbar_{i + 1}_{j + 1}" for i, j in zip(*iu)]
    cfg = samples.config
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for j in range(samples.count):
            it = cfg.burn_in + j * cfg.thin + cfg.thin - 1
            vals = [str(it)] + [repr(float(v)) for v in samples.sigma[j][iu]]
            if samples.delta is not None:
                vals += [repr(float(v)) for v in samples.delta[j]]
            elif samples.delta_bar is not None:
                vals += [repr(float(v)) for v in samples.delta_bar[j][iu]]
            fh.write(",".join(vals) + "\n")
