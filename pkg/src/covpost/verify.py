"""Monte Carlo verification suite for the random-matrix facts the
contraction and inconsistency experiments rest on: extreme singular values
of Gaussian and sub-Gaussian matrices, chi-square extreme-order statistics,
the Bai-Yin sample-covariance limit, the Woodbury and Schur determinant
identities, and the posterior-mean decomposition used by the fixed-ratio
study.

Every check is deterministic given (seed, parameters). ``nominal_bound``
on a report is the threshold its pass flag is judged against; theoretical
reference values live in ``details``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import ParameterOutOfRangeError, PreconditionError
from .gibbs import ChainConfig, gibbs_dsiw, gibbs_matrixf
from .linalg import PDMatrix, schur_det_identity_check, spectral_norm
from .model import Dataset, compute_stats, woodbury_check
from .priors import DsiwPrior, MatrixFPrior, Prior, preset
from .rng import RngStream


@dataclass(frozen=True)
class CheckReport:
    check_name: str
    trials: int
    pass_fraction: float
    nominal_bound: float
    passed: bool
    details: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "trials": self.trials,
            "pass_fraction": self.pass_fraction,
            "nominal_bound": self.nominal_bound,
            "passed": self.passed,
            "details": dict(self.details),
        }


def check_gaussian_singular_values(
    n: int, q: int, trials: int, rng: RngStream, c: float = 4.0, required: float = 0.95
) -> CheckReport:
    """Extreme singular values of an (n+q) x q standard Gaussian matrix.

    Each trial checks s_min(A)/sqrt(n) >= (1 + c sqrt(q/n))^{-1/2} and
    s_max(A)/sqrt(n) <= (1 - c sqrt(q/n))^{-1/2} (upper bound vacuous when
    c sqrt(q/n) >= 1). The theoretical coverage 1 - 2 exp(-q/2) is reported
    in the details.
    """
    if not (1 <= q < n):
        raise ParameterOutOfRangeError(f"need 1 <= q < n, got q={q}, n={n}")
    if trials < 1:
        raise ParameterOutOfRangeError("trials must be >= 1")
    x = c * math.sqrt(q / n)
    lo = (1.0 + x) ** -0.5
    hi = (1.0 - x) ** -0.5 if x < 1.0 else math.inf
    npass = 0
    smins, smaxs = [], []
    for _ in range(trials):
        A = rng.gen.standard_normal((n + q, q))
        s = np.linalg.svd(A, compute_uv=False) / math.sqrt(n)
        smins.append(float(s[-1]))
        smaxs.append(float(s[0]))
        if lo <= s[-1] and s[0] <= hi:
            npass += 1
    frac = npass / trials
    return CheckReport(
        check_name="gaussian_singular_values",
        trials=trials,
        pass_fraction=frac,
        nominal_bound=required,
        passed=frac >= required,
        details={
            "c": c, "lower": lo, "upper": hi,
            "coverage_theory": 1.0 - 2.0 * math.exp(-q / 2.0),
            "mean_smin": float(np.mean(smins)), "mean_smax": float(np.mean(smaxs)),
        },
    )


def check_subgaussian_singular_values(
    n: int,
    p: int,
    q: int,
    trials: int,
    rng: RngStream,
    c: float = 4.0,
    required: float = 0.95,
    rows: str = "rademacher",
    project: bool = False,
) -> CheckReport:
    """Extreme singular values of an (n-p) x q matrix with isotropic
    sub-Gaussian rows.

    Each trial checks s/sqrt(n-p) within (1 -+ c sqrt(q/n))^{+-1/2}. Rows
    are Rademacher by default (``rows="gaussian"`` for the Gaussian special
    case). With ``project=True`` the trial instead draws n rows and projects
    out p random directions, exercising the fact that projected sub-Gaussian
    data stays sub-Gaussian: the nonzero singular values of the projected
    matrix are exactly those of its (n-p)-row reduction.
    """
    if not (1 <= q and p >= 0 and p + q < n):
        raise ParameterOutOfRangeError(f"need p + q < n, got p={p}, q={q}, n={n}")
    if rows not in ("rademacher", "gaussian"):
        raise ParameterOutOfRangeError(f"unknown row distribution {rows!r}")
    x = c * math.sqrt(q / n)
    lo = math.sqrt(max(1.0 - x, 0.0))
    hi = math.sqrt(1.0 + x)
    npass = 0
    for _ in range(trials):
        if project:
            Z = _subg_rows(n, q, rows, rng)
            if p > 0:
                G = rng.gen.standard_normal((n, p))
                Qp, _ = np.linalg.qr(G)
                Z = Z - Qp @ (Qp.T @ Z)
            s = np.linalg.svd(Z, compute_uv=False)[:q] / math.sqrt(n - p)
        else:
            A = _subg_rows(n - p, q, rows, rng)
            s = np.linalg.svd(A, compute_uv=False) / math.sqrt(n - p)
        if lo <= s[-1] and s[0] <= hi:
            npass += 1
    frac = npass / trials
    return CheckReport(
        check_name="subgaussian_singular_values" + ("_projected" if project else ""),
        trials=trials,
        pass_fraction=frac,
        nominal_bound=required,
        passed=frac >= required,
        details={"c": c, "lower": lo, "upper": hi, "p": p, "rows": 0.0 if rows == "rademacher" else 1.0},
    )


def _subg_rows(nrows: int, q: int, rows: str, rng: RngStream) -> np.ndarray:
    if rows == "gaussian":
        return rng.gen.standard_normal((nrows, q))
    return rng.gen.integers(0, 2, size=(nrows, q)).astype(float) * 2.0 - 1.0


def check_chisq_extremes(
    n: int, gamma: float, trials: int, rng: RngStream, required: float = 0.9
) -> CheckReport:
    """Extremes of q_n = round(gamma n) normalized chi-square(n) means.

    Both max and min of S_i = chi2_n / n must stay within
    6 sqrt(log(q_n)/n) of 1, an explicit finite-n envelope implied by the
    exponential tail of the chi-square distribution plus a union bound.
    """
    if not (0.0 < gamma <= 1.0):
        raise ParameterOutOfRangeError(f"gamma must be in (0, 1], got {gamma}")
    q = max(1, int(math.floor(gamma * n + 0.5)))
    envelope = 6.0 * math.sqrt(math.log(q) / n) if q > 1 else 0.0
    npass = 0
    devs_hi, devs_lo = [], []
    for _ in range(trials):
        s = rng.gen.chisquare(n, size=q) / n
        dev_hi = abs(float(s.max()) - 1.0)
        dev_lo = abs(float(s.min()) - 1.0)
        devs_hi.append(dev_hi)
        devs_lo.append(dev_lo)
        if dev_hi <= envelope and dev_lo <= envelope:
            npass += 1
    frac = npass / trials
    return CheckReport(
        check_name="chisq_extremes",
        trials=trials,
        pass_fraction=frac,
        nominal_bound=required,
        passed=frac >= required,
        details={
            "q_n": float(q), "envelope": envelope,
            "mean_max_dev": float(np.mean(devs_hi)), "mean_min_dev": float(np.mean(devs_lo)),
        },
    )


def check_bai_yin(
    n: int, gamma: float, trials: int, rng: RngStream, tol: float = 0.1
) -> CheckReport:
    """Sample-covariance extreme-eigenvalue limit (Bai-Yin).

    With S = Y'Y/n for Y n x floor(gamma n) standard Gaussian, the deviation
    ||n S/(n-1) - I|| converges to gamma + 2 sqrt(gamma); each trial records
    the absolute gap to that limit and passes when it is at most ``tol``.
    """
    if not (0.0 < gamma < 1.0):
        raise ParameterOutOfRangeError(f"gamma must be in (0, 1), got {gamma}")
    q = max(1, int(math.floor(gamma * n)))
    g = q / n
    limit = g + 2.0 * math.sqrt(g)
    devs = []
    for _ in range(trials):
        Y = rng.gen.standard_normal((n, q))
        S = Y.T @ Y / n
        norm = float(np.abs(np.linalg.eigvalsh(n * S / (n - 1.0) - np.eye(q))).max())
        devs.append(abs(norm - limit))
    devs = np.array(devs)
    frac = float(np.mean(devs <= tol))
    mean_dev = float(devs.mean())
    return CheckReport(
        check_name="bai_yin",
        trials=trials,
        pass_fraction=frac,
        nominal_bound=tol,
        passed=mean_dev <= tol,
        details={"q_n": float(q), "limit": limit, "mean_deviation": mean_dev},
    )


def check_posterior_mean_formula(
    n: int, q: int, prior: Prior, rng: RngStream, kept: int = 1000
) -> CheckReport:
    """Cross-check the posterior-mean decomposition on i.i.d. data.

    With nu = 1 the Rao-Blackwellized posterior mean is exactly
    (n S + mean of sampled scale) / (n - 1); this check verifies the plain
    average of the Sigma draws agrees with it entrywise within 4 Monte Carlo
    standard errors, giving two independent estimates of the same
    expectation.
    """
    if prior.nu != 1:
        raise PreconditionError(f"this decomposition holds for nu=1, got nu={prior.nu}")
    sigma0 = PDMatrix.identity(q)
    from .experiments import generate_iid_data  # local import to avoid a cycle

    data = generate_iid_data(n, sigma0, "gaussian", rng.substream(0))
    stats = compute_stats(data)
    cfg = ChainConfig(
        iterations=1000 + kept * 5, burn_in=1000, thin=5,
        seed=rng.seed, stream_id=rng.substream(1).stream_id,
    )
    if isinstance(prior, DsiwPrior):
        samples = gibbs_dsiw(stats, prior, cfg)
        scale_mean = prior.c_nu * np.diag(samples.delta.mean(axis=0))
    else:
        samples = gibbs_matrixf(stats, prior, cfg)
        scale_mean = samples.delta_bar.mean(axis=0)
    plain = samples.sigma.mean(axis=0)
    analytic = (stats.s_y.entries + scale_mean) / (n - 1.0)
    se = samples.sigma.std(axis=0, ddof=1) / math.sqrt(samples.count)
    gap = np.abs(plain - analytic)
    ok = gap <= 4.0 * np.maximum(se, 1e-12)
    frac = float(ok.mean())
    return CheckReport(
        check_name="posterior_mean_formula",
        trials=samples.count,
        pass_fraction=frac,
        nominal_bound=1.0,
        passed=bool(ok.all()),
        details={"max_gap_in_se": float((gap / np.maximum(se, 1e-12)).max())},
    )


def check_identities(rng: RngStream, trials: int = 500) -> CheckReport:
    """Woodbury and Schur determinant identities on random PD instances.

    Algebraic, not probabilistic: the pass fraction must be exactly 1.
    """
    gen = rng.gen
    npass = 0
    for _ in range(trials):
        n = int(gen.integers(20, 61))
        p = int(gen.integers(1, 6))
        q = int(gen.integers(1, 7))
        lam = float(gen.uniform(0.05, 5.0))
        X = gen.standard_normal((n, p))
        Y = gen.standard_normal((n, q))
        stats = compute_stats(Dataset(Y=Y, X=X), lam)
        if stats.w_n is not None and woodbury_check(stats):
            npass += 1
    for _ in range(trials):
        d = int(gen.integers(2, 11))
        G = gen.standard_normal((d, 2 * d))
        S = PDMatrix(G @ G.T / (2 * d))
        delta = gen.uniform(0.1, 3.0, size=d)
        if schur_det_identity_check(S, float(delta[0]), delta[1:]):
            npass += 1
    frac = npass / (2 * trials)
    return CheckReport(
        check_name="identities",
        trials=2 * trials,
        pass_fraction=frac,
        nominal_bound=1.0,
        passed=frac == 1.0,
        details={},
    )


def check_ls_coeff_scaling(
    n_grid: Sequence[int], p: int, exponent: float, trials: int, rng: RngStream
) -> CheckReport:
    """Report-only check: the scaled least-squares coefficient error
    ||B_ls - B0|| (n/q)^{1/4} should stay of constant order across n."""
    from .experiments import Sigma0Spec, generate_regression_data, make_sigma0

    scaled = {}
    for ni, n in enumerate(n_grid):
        q = max(1, math.ceil(n ** exponent - 1e-9))
        vals = []
        for rep in range(trials):
            sub = rng.substream(ni, rep)
            data, truth = generate_regression_data(
                n, p, q, 1.0, make_sigma0(Sigma0Spec("identity"), q), sub
            )
            stats = compute_stats(data, lam=0.0)
            vals.append(spectral_norm(stats.b_ls - truth.b0) * (n / q) ** 0.25)
        scaled[f"n={n}"] = float(np.mean(vals))
    return CheckReport(
        check_name="ls_coeff_scaling",
        trials=trials * len(n_grid),
        pass_fraction=1.0,
        nominal_bound=0.0,
        passed=True,
        details=scaled,
    )


def run_default_suite(seed: int = 0, c: float = 4.0) -> List[CheckReport]:
    """The standard verification battery (deterministic given the seed)."""
    root = RngStream(seed, 0)
    reports = [
        check_identities(root.substream(0)),
        check_gaussian_singular_values(2000, 40, 200, root.substream(1), c=c),
        check_subgaussian_singular_values(2000, 10, 40, 200, root.substream(2), c=c),
        check_subgaussian_singular_values(
            2000, 10, 40, 50, root.substream(3), c=c, project=True
        ),
        check_chisq_extremes(5000, 0.5, 50, root.substream(4)),
        check_bai_yin(4000, 0.1, 20, root.substream(5)),
        check_posterior_mean_formula(
            200, 5, preset("IG_DSIW", 5, nu=1.0), root.substream(6)
        ),
        check_posterior_mean_formula(
            200, 5, preset("MATRIX_F", 5, nu=1.0), root.substream(7)
        ),
        check_ls_coeff_scaling((200, 800, 3200), 3, 0.5, 5, root.substream(8)),
    ]
    return reports


def reports_to_dict(reports: Sequence[CheckReport]) -> dict:
    return {
        "checks": [r.to_dict() for r in reports],
        "all_passed": all(r.passed for r in reports),
    }
