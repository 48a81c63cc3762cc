"""Simulation studies: posterior contraction sweeps and the fixed-ratio
inconsistency study, as declarative plans mapped over (prior, n, replicate)
tasks.

Every task derives its random streams from (master_seed, prior index,
n index, replicate index), never from scheduling order, so plan output is
byte-identical across worker counts and task orderings. Failed tasks are
logged and excluded from the averages instead of aborting a sweep.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import CovpostError, ParameterOutOfRangeError, PlanError
from .gibbs import ChainConfig, gibbs_dsiw, gibbs_matrixf, posterior_mean_sigma, tail_probability
from .linalg import PDMatrix, spectral_norm
from .model import Dataset, TrueParams, compute_stats
from .priors import PRESET_NAMES, DsiwPrior, preset
from .rng import RngStream, derive_stream_id

log = logging.getLogger("covpost")

IDENTITY = "identity"
TOEPLITZ = "toeplitz"
SPECTRAL = "spectral"

GAUSSIAN = "gaussian"
RADEMACHER = "rademacher"


@dataclass(frozen=True)
class Sigma0Spec:
    """True covariance form: identity, Toeplitz(rho^|i-j|), or a random
    rotation of Uniform(eig_lo, eig_hi) eigenvalues."""

    kind: str = IDENTITY
    rho: float = 0.9
    eig_lo: float = 1.0
    eig_hi: float = 2.0

    def __post_init__(self):
        if self.kind not in (IDENTITY, TOEPLITZ, SPECTRAL):
            raise ParameterOutOfRangeError(f"unknown sigma0 kind {self.kind!r}")
        if self.kind == TOEPLITZ and not (0.0 < self.rho < 1.0):
            raise ParameterOutOfRangeError(f"toeplitz rho must be in (0,1), got {self.rho}")
        if self.kind == SPECTRAL and not (0.0 < self.eig_lo < self.eig_hi):
            raise ParameterOutOfRangeError(
                f"spectral eigenvalue range must satisfy 0 < lo < hi, got ({self.eig_lo}, {self.eig_hi})"
            )


@dataclass(frozen=True)
class QSchedule:
    """Response-dimension schedule: q_n = ceil(n^exponent) (power) or
    round(gamma n) (linear), floored at 1."""

    kind: str
    exponent: float = 0.5
    gamma: float = 0.1

    def __post_init__(self):
        if self.kind == "power":
            if not (0.0 < self.exponent < 1.0):
                raise ParameterOutOfRangeError(
                    f"power exponent must be in (0,1), got {self.exponent}"
                )
        elif self.kind == "linear":
            if self.gamma <= 0:
                raise ParameterOutOfRangeError(f"linear gamma must be > 0, got {self.gamma}")
        else:
            raise ParameterOutOfRangeError(f"unknown schedule kind {self.kind!r}")

    def q_of(self, n: int) -> int:
        if self.kind == "power":
            return max(1, math.ceil(n ** self.exponent - 1e-9))
        return max(1, int(math.floor(self.gamma * n + 0.5)))


@dataclass(frozen=True)
class ExperimentPlan:
    """Declarative sweep over (n, q_n, Sigma0, prior, replicate)."""

    n_grid: Tuple[int, ...]
    q_schedule: QSchedule
    sigma0: Sigma0Spec
    priors: Tuple[str, ...]
    replicates: int
    chain: ChainConfig
    m_const: float = 2.0
    master_seed: int = 0
    error_dist: str = GAUSSIAN
    workers: int = 1

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "priors", tuple(str(p).upper() for p in self.priors))
        if len(grid) == 0 or any(n < 2 for n in grid) or list(grid) != sorted(set(grid)):
            raise PlanError(f"n_grid must be ascending positive integers, got {grid}")
        if len(self.priors) == 0:
            raise PlanError("plan needs at least one prior")
        for name in self.priors:
            if name not in PRESET_NAMES:
                raise PlanError(f"unknown prior {name!r}; choose from {PRESET_NAMES}")
        if self.replicates < 1:
            raise PlanError("replicates must be >= 1")
        if self.m_const <= 0:
            raise PlanError("tail threshold constant M must be positive")
        if self.workers < 1:
            raise PlanError("workers must be >= 1")
        if self.error_dist not in (GAUSSIAN, RADEMACHER):
            raise PlanError(f"unknown error_dist {self.error_dist!r}")
        if self.q_schedule.kind == "power":
            for n in grid:
                if self.q_schedule.q_of(n) >= n:
                    raise PlanError(f"power schedule gives q_n >= n at n={n}")
        else:
            if self.q_schedule.q_of(grid[0]) < 1:
                raise PlanError("linear schedule gives q_n < 1 at the smallest n")


@dataclass(frozen=True)
class MetricRow:
    """One aggregated (prior, n) cell of an experiment table."""

    prior_name: str
    n: int
    q_n: int
    replicates_done: int
    mean_tail_prob: float
    mean_rel_error: float
    se_tail_prob: float
    se_rel_error: float
    wall_time_s: float


METRIC_FIELDS = (
    "prior_name", "n", "q_n", "replicates_done",
    "mean_tail_prob", "mean_rel_error", "se_tail_prob", "se_rel_error", "wall_time_s",
)


# ---------------------------------------------------------------------------
# data generation


def make_sigma0(spec: Sigma0Spec, q: int, rng: Optional[RngStream] = None) -> PDMatrix:
    """Construct the true covariance for dimension q.

    The spectral form draws a Haar orthogonal factor (QR of a standard
    Gaussian matrix, sign-normalized so the triangular factor has positive
    diagonal) and Uniform(eig_lo, eig_hi) eigenvalues, and therefore
    consumes randomness; the identity and Toeplitz forms are deterministic.
    """
    if q < 1:
        raise ParameterOutOfRangeError(f"q must be >= 1, got {q}")
    if spec.kind == IDENTITY:
        return PDMatrix.identity(q)
    if spec.kind == TOEPLITZ:
        idx = np.arange(q)
        return PDMatrix(spec.rho ** np.abs(idx[:, None] - idx[None, :]))
    if rng is None:
        raise ParameterOutOfRangeError("spectral sigma0 requires an RngStream")
    G = rng.gen.standard_normal((q, q))
    Q, R = np.linalg.qr(G)
    Q = Q * np.sign(np.diag(R))
    lam = rng.gen.uniform(spec.eig_lo, spec.eig_hi, size=q)
    m = (Q * lam) @ Q.T
    return PDMatrix((m + m.T) / 2.0)


def generate_iid_data(
    n: int, sigma0: PDMatrix, error_dist: str, rng: RngStream
) -> Dataset:
    """n i.i.d. mean-zero rows with covariance sigma0.

    Rows are sigma0^{1/2} z_i with z_i either standard Gaussian or Rademacher
    (+/-1, an isotropic sub-Gaussian alternative)."""
    if n < 2:
        raise ParameterOutOfRangeError(f"need n >= 2, got {n}")
    q = sigma0.dim
    if error_dist == GAUSSIAN:
        Z = rng.gen.standard_normal((n, q))
    elif error_dist == RADEMACHER:
        Z = rng.gen.integers(0, 2, size=(n, q)).astype(float) * 2.0 - 1.0
    else:
        raise ParameterOutOfRangeError(f"unknown error_dist {error_dist!r}")
    return Dataset(Y=Z @ sigma0.chol.T)


def generate_regression_data(
    n: int, p: int, q: int, b0_scale: float, sigma0: PDMatrix, rng: RngStream
) -> Tuple[Dataset, TrueParams]:
    """Regression dataset with i.i.d. N(0,1) design entries and Gaussian noise."""
    if p < 1 or n <= p:
        raise ParameterOutOfRangeError(f"need 1 <= p < n, got p={p}, n={n}")
    if b0_scale < 0:
        raise ParameterOutOfRangeError("b0_scale must be nonnegative")
    X = rng.gen.standard_normal((n, p))
    B0 = rng.gen.standard_normal((p, q)) * b0_scale
    E = rng.gen.standard_normal((n, q)) @ sigma0.chol.T
    eigs = np.linalg.eigvalsh(sigma0.entries)
    k_sigma = min(1.0, float(eigs[0]), float(1.0 / eigs[-1]))
    truth = TrueParams(sigma0=sigma0, b0=B0, k_sigma=k_sigma)
    return Dataset(Y=X @ B0 + E, X=X), truth


# ---------------------------------------------------------------------------
# plan execution


def _replicate_task(plan: ExperimentPlan, prior_idx: int, n_idx: int, rep: int):
    """One (prior, n, replicate) cell: simulate, run the chain, score.

    Returns (tail_probability, relative_error, task_seconds) or None when
    the task failed.
    """
    t0 = time.perf_counter()
    n = plan.n_grid[n_idx]
    q = plan.q_schedule.q_of(n)
    base = RngStream(plan.master_seed, derive_stream_id(prior_idx, n_idx, rep))
    try:
        sigma0 = make_sigma0(plan.sigma0, q, base.substream(0))
        data = generate_iid_data(n, sigma0, plan.error_dist, base.substream(1))
        stats = compute_stats(data)
        prior = preset(plan.priors[prior_idx], q)
        cfg = replace(
            plan.chain,
            seed=plan.master_seed,
            stream_id=derive_stream_id(prior_idx, n_idx, rep, 2),
        )
        if isinstance(prior, DsiwPrior):
            samples = gibbs_dsiw(stats, prior, cfg)
        else:
            samples = gibbs_matrixf(stats, prior, cfg)
        threshold = plan.m_const * math.sqrt(q / n)
        tail = tail_probability(samples, sigma0, threshold)
        sig_hat = posterior_mean_sigma(samples, stats, prior, rao_blackwell=True)
        rel = spectral_norm(sig_hat.entries - sigma0.entries) / spectral_norm(sigma0.entries)
    except (CovpostError, np.linalg.LinAlgError) as exc:
        log.warning(
            "task failed (prior=%s, n=%d, rep=%d): %s",
            plan.priors[prior_idx], n, rep, exc,
        )
        return None
    return tail, rel, time.perf_counter() - t0


def _run_plan(plan: ExperimentPlan) -> List[MetricRow]:
    keys = [
        (pi, ni, rep)
        for pi in range(len(plan.priors))
        for ni in range(len(plan.n_grid))
        for rep in range(plan.replicates)
    ]
    results = {}
    if plan.workers == 1:
        for key in keys:
            results[key] = _replicate_task(plan, *key)
    else:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            futures = {key: pool.submit(_replicate_task, plan, *key) for key in keys}
            for key, fut in futures.items():
                results[key] = fut.result()

    rows = []
    for pi, prior_name in enumerate(plan.priors):
        for ni, n in enumerate(plan.n_grid):
            cell = [results[(pi, ni, rep)] for rep in range(plan.replicates)]
            done = [c for c in cell if c is not None]
            tails = np.array([c[0] for c in done])
            rels = np.array([c[1] for c in done])
            secs = float(sum(c[2] for c in done))
            m = len(done)
            rows.append(MetricRow(
                prior_name=prior_name,
                n=n,
                q_n=plan.q_schedule.q_of(n),
                replicates_done=m,
                mean_tail_prob=float(tails.mean()) if m else float("nan"),
                mean_rel_error=float(rels.mean()) if m else float("nan"),
                se_tail_prob=float(tails.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0,
                se_rel_error=float(rels.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0,
                wall_time_s=secs,
            ))
    return rows


def run_consistency(plan: ExperimentPlan) -> List[MetricRow]:
    """Contraction sweep: requires a power schedule (q_n = o(n))."""
    if plan.q_schedule.kind != "power":
        raise PlanError("consistency experiments require a power q-schedule")
    return _run_plan(plan)


def run_inconsistency(plan: ExperimentPlan) -> List[MetricRow]:
    """Fixed-ratio sweep (q_n/n constant): requires a linear schedule and
    identity Sigma0; the relative error is expected to plateau near
    gamma + 2 sqrt(gamma) instead of vanishing."""
    if plan.q_schedule.kind != "linear":
        raise PlanError("inconsistency experiments require a linear q-schedule")
    if plan.sigma0.kind != IDENTITY:
        raise PlanError("inconsistency experiments require the identity sigma0")
    return _run_plan(plan)


# ---------------------------------------------------------------------------
# table I/O


def write_metrics_csv(rows: Sequence[MetricRow], path, include_timing: bool = False) -> None:
    """Write the metric table.

    By default wall_time_s is written as 0.0 so that reruns of the same plan
    produce byte-identical files; pass include_timing=True for the measured
    seconds.
    """
    with open(path, "w", newline="") as fh:
        fh.write(",".join(METRIC_FIELDS) + "\n")
        for r in rows:
            secs = r.wall_time_s if include_timing else 0.0
            vals = [
                r.prior_name, str(r.n), str(r.q_n), str(r.replicates_done),
                repr(float(r.mean_tail_prob)), repr(float(r.mean_rel_error)),
                repr(float(r.se_tail_prob)), repr(float(r.se_rel_error)),
                repr(float(secs)),
            ]
            fh.write(",".join(vals) + "\n")


def read_metrics_csv(path) -> List[MetricRow]:
    import csv as _csv

    rows = []
    with open(path, newline="") as fh:
        reader = _csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != METRIC_FIELDS:
            raise ValueError(f"{path}: unexpected metric CSV header {reader.fieldnames}")
        for rec in reader:
            rows.append(MetricRow(
                prior_name=rec["prior_name"],
                n=int(rec["n"]),
                q_n=int(rec["q_n"]),
                replicates_done=int(rec["replicates_done"]),
                mean_tail_prob=float(rec["mean_tail_prob"]),
                mean_rel_error=float(rec["mean_rel_error"]),
                se_tail_prob=float(rec["se_tail_prob"]),
                se_rel_error=float(rec["se_rel_error"]),
                wall_time_s=float(rec["wall_time_s"]),
            ))
    return rows


def ridge_coeff_error(
    n: int, p: int, q: int, b0_scale: float, lam: float, rng: RngStream
) -> float:
    """Spectral-norm error of the ridge coefficient estimate against the
    truth on one simulated regression dataset (coefficient-contraction
    smoke metric)."""
    spec = Sigma0Spec(IDENTITY)
    data, truth = generate_regression_data(n, p, q, b0_scale, make_sigma0(spec, q), rng)
    stats = compute_stats(data, lam)
    return float(spectral_norm(stats.b_tilde - truth.b0))
