"""Command-line front end.

Subcommands: simulate (write a synthetic dataset CSV), fit (run one chain on
a dataset and write a posterior summary JSON), experiment (run a plan JSON
and write the metric CSV plus SVG charts), verify (run the Monte Carlo check
suite), and plot (re-render a metric CSV to SVG).

Every command is a pure function of (configuration, seed): rerunning writes
byte-identical files. Exit codes: 0 success, 1 internal failure or failed
verification, 2 user-input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from .errors import CovpostError
from .experiments import (
    ExperimentPlan,
    MetricRow,
    QSchedule,
    Sigma0Spec,
    generate_iid_data,
    make_sigma0,
    read_metrics_csv,
    run_consistency,
    run_inconsistency,
    write_metrics_csv,
)
from .gibbs import ChainConfig, dump_chain_csv, effective_sample_size, gibbs_dsiw, gibbs_matrixf, posterior_mean_sigma
from .model import compute_stats, dataset_from_csv, dataset_to_csv
from .priors import DsiwPrior, preset
from .rng import RngStream
from .svg import write_chart
from .verify import reports_to_dict, run_default_suite

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad user input (malformed file, invalid configuration)."""


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"environment variable {name} must be an integer, got {raw!r}")


def _default_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return _env_int("COVPOST_SEED", 0)


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    seed = _default_seed(args)
    spec = _sigma0_from_flags(args)
    rng = RngStream(seed, 0)
    sigma0 = make_sigma0(spec, args.q, rng.substream(0))
    data = generate_iid_data(args.n, sigma0, args.error_dist, rng.substream(1))
    dataset_to_csv(data, args.out)
    print(f"wrote {args.n} x {args.q} dataset to {args.out}")
    return EXIT_OK


def _sigma0_from_flags(args) -> Sigma0Spec:
    try:
        return Sigma0Spec(kind=args.sigma0, rho=args.rho, eig_lo=args.lo, eig_hi=args.hi)
    except CovpostError as exc:
        raise UsageError(str(exc))


# ---------------------------------------------------------------------------
# fit


def _parse_overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, _, val = item.partition("=")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"--set value for {key!r} must be numeric, got {val!r}")
    return out


def cmd_fit(args) -> int:
    seed = _default_seed(args)
    try:
        data = dataset_from_csv(args.data)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc))
    try:
        prior = preset(args.prior, data.q, **_parse_overrides(args.set))
    except CovpostError as exc:
        raise UsageError(str(exc))

    stats = compute_stats(data, args.ridge)
    cfg = ChainConfig(
        iterations=args.iterations, burn_in=args.burn_in, thin=args.thin,
        seed=seed, stream_id=0, sample_b=args.sample_b,
    )
    if isinstance(prior, DsiwPrior):
        samples = gibbs_dsiw(stats, prior, cfg)
    else:
        samples = gibbs_matrixf(stats, prior, cfg)

    mean = posterior_mean_sigma(samples, stats, prior, rao_blackwell=True).entries
    lo = np.quantile(samples.sigma, 0.025, axis=0)
    hi = np.quantile(samples.sigma, 0.975, axis=0)
    half_width = (hi - lo) / 2.0
    q = samples.q
    ess = np.array([
        [effective_sample_size(samples.sigma[:, i, j]) for j in range(q)] for i in range(q)
    ])
    summary = {
        "prior": prior.name,
        "n": stats.n,
        "p": stats.p,
        "q": stats.q,
        "lambda": stats.lam,
        "seed": seed,
        "chain": {
            "iterations": cfg.iterations, "burn_in": cfg.burn_in,
            "thin": cfg.thin, "kept": cfg.kept,
        },
        "posterior_mean_sigma": mean.tolist(),
        "ci95_half_width": half_width.tolist(),
        "ess": ess.tolist(),
    }
    if samples.b is not None:
        summary["posterior_mean_b"] = samples.b.mean(axis=0).tolist()
    with open(args.out, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.dump_chain:
        dump_chain_csv(samples, args.dump_chain)
    print(f"wrote posterior summary to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment


_PLAN_KEYS = {
    "kind", "n_grid", "q_schedule", "sigma0", "priors", "replicates",
    "chain", "M", "seed", "workers", "error_dist",
}


def plan_from_dict(cfg: dict, default_seed: int = 0, default_workers: int = 1):
    """Validate a plan JSON object and build (kind, ExperimentPlan).

    Unknown keys anywhere in the object are errors: sweeps are expensive and
    typos must fail before any work starts.
    """
    if not isinstance(cfg, dict):
        raise UsageError("plan must be a JSON object")
    unknown = set(cfg) - _PLAN_KEYS
    if unknown:
        raise UsageError(f"unknown plan keys: {sorted(unknown)}")
    missing = {"kind", "n_grid", "q_schedule", "sigma0", "priors", "replicates", "chain"} - set(cfg)
    if missing:
        raise UsageError(f"plan is missing required keys: {sorted(missing)}")

    kind = cfg["kind"]
    if kind not in ("consistency", "inconsistency"):
        raise UsageError(f"plan kind must be consistency or inconsistency, got {kind!r}")

    qs = cfg["q_schedule"]
    if not isinstance(qs, dict) or len(qs) != 1 or next(iter(qs)) not in ("power", "gamma"):
        raise UsageError('q_schedule must be {"power": x} or {"gamma": g}')
    try:
        if "power" in qs:
            schedule = QSchedule("power", exponent=float(qs["power"]))
        else:
            schedule = QSchedule("linear", gamma=float(qs["gamma"]))

        s0 = cfg["sigma0"]
        if not isinstance(s0, dict) or len(s0) != 1:
            raise UsageError('sigma0 must be {"identity":{}}, {"toeplitz":{...}} or {"spectral":{...}}')
        s0_kind, s0_args = next(iter(s0.items()))
        if s0_kind == "identity":
            if s0_args not in ({}, None):
                raise UsageError("identity sigma0 takes no parameters")
            sigma0 = Sigma0Spec("identity")
        elif s0_kind == "toeplitz":
            extra = set(s0_args) - {"rho"}
            if extra:
                raise UsageError(f"unknown toeplitz keys: {sorted(extra)}")
            sigma0 = Sigma0Spec("toeplitz", rho=float(s0_args.get("rho", 0.9)))
        elif s0_kind == "spectral":
            extra = set(s0_args) - {"lo", "hi"}
            if extra:
                raise UsageError(f"unknown spectral keys: {sorted(extra)}")
            sigma0 = Sigma0Spec(
                "spectral",
                eig_lo=float(s0_args.get("lo", 1.0)),
                eig_hi=float(s0_args.get("hi", 2.0)),
            )
        else:
            raise UsageError(f"unknown sigma0 kind {s0_kind!r}")

        ch = cfg["chain"]
        extra = set(ch) - {"iterations", "burn_in", "thin"}
        if extra:
            raise UsageError(f"unknown chain keys: {sorted(extra)}")
        chain = ChainConfig(
            iterations=int(ch["iterations"]),
            burn_in=int(ch.get("burn_in", 0)),
            thin=int(ch.get("thin", 1)),
        )

        plan = ExperimentPlan(
            n_grid=tuple(int(n) for n in cfg["n_grid"]),
            q_schedule=schedule,
            sigma0=sigma0,
            priors=tuple(cfg["priors"]),
            replicates=int(cfg["replicates"]),
            chain=chain,
            m_const=float(cfg.get("M", 2.0)),
            master_seed=int(cfg.get("seed", default_seed)),
            error_dist=str(cfg.get("error_dist", "gaussian")),
            workers=int(cfg.get("workers", default_workers)),
        )
    except UsageError:
        raise
    except (CovpostError, TypeError, ValueError, KeyError) as exc:
        raise UsageError(f"invalid plan: {exc}")
    return kind, plan


def plan_to_dict(kind: str, plan: ExperimentPlan) -> dict:
    if plan.q_schedule.kind == "power":
        qs = {"power": plan.q_schedule.exponent}
    else:
        qs = {"gamma": plan.q_schedule.gamma}
    if plan.sigma0.kind == "identity":
        s0 = {"identity": {}}
    elif plan.sigma0.kind == "toeplitz":
        s0 = {"toeplitz": {"rho": plan.sigma0.rho}}
    else:
        s0 = {"spectral": {"lo": plan.sigma0.eig_lo, "hi": plan.sigma0.eig_hi}}
    return {
        "kind": kind,
        "n_grid": list(plan.n_grid),
        "q_schedule": qs,
        "sigma0": s0,
        "priors": list(plan.priors),
        "replicates": plan.replicates,
        "chain": {
            "iterations": plan.chain.iterations,
            "burn_in": plan.chain.burn_in,
            "thin": plan.chain.thin,
        },
        "M": plan.m_const,
        "seed": plan.master_seed,
        "workers": plan.workers,
        "error_dist": plan.error_dist,
    }


def cmd_experiment(args) -> int:
    try:
        with open(args.plan) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(str(exc))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.plan}: invalid JSON: {exc}")
    kind, plan = plan_from_dict(
        cfg,
        default_seed=_env_int("COVPOST_SEED", 0),
        default_workers=_env_int("COVPOST_WORKERS", 1),
    )
    if args.workers is not None:
        plan = replace(plan, workers=args.workers)

    os.makedirs(args.out_dir, exist_ok=True)
    rows = run_consistency(plan) if kind == "consistency" else run_inconsistency(plan)

    csv_path = os.path.join(args.out_dir, "metrics.csv")
    write_metrics_csv(rows, csv_path)
    with open(os.path.join(args.out_dir, "plan.json"), "w") as fh:
        json.dump(plan_to_dict(kind, plan), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _emit_charts(rows, args.out_dir, log_x=kind == "consistency")
    total = sum(r.wall_time_s for r in rows)
    print(f"wrote {csv_path} ({len(rows)} rows, {total:.1f}s of chain work)", file=sys.stderr)
    return EXIT_OK


def _series(rows, metric: str):
    series = {}
    for r in rows:
        series.setdefault(r.prior_name, []).append(
            (float(r.n), getattr(r, metric))
        )
    for pts in series.values():
        pts.sort(key=lambda t: t[0])
    return series


def _emit_charts(rows, out_dir: str, log_x: bool) -> None:
    write_chart(
        os.path.join(out_dir, "tail_prob.svg"),
        _series(rows, "mean_tail_prob"),
        title="Posterior tail probability vs sample size",
        x_label="n", y_label="mean tail probability", log_x=log_x,
    )
    write_chart(
        os.path.join(out_dir, "rel_error.svg"),
        _series(rows, "mean_rel_error"),
        title="Relative error of posterior mean vs sample size",
        x_label="n", y_label="mean relative error", log_x=log_x,
    )


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    seed = _default_seed(args)
    reports = run_default_suite(seed=seed, c=args.envelope_c)
    payload = reports_to_dict(reports)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.check_name}: pass_fraction={r.pass_fraction:.4g} "
              f"bound={r.nominal_bound:.4g} trials={r.trials}")
    return EXIT_OK if payload["all_passed"] else EXIT_INTERNAL


# ---------------------------------------------------------------------------
# plot

_METRICS = {"tail": "mean_tail_prob", "relerr": "mean_rel_error"}


def cmd_plot(args) -> int:
    try:
        rows = read_metrics_csv(args.metrics)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc))
    metric = _METRICS[args.metric]
    label = "mean tail probability" if args.metric == "tail" else "mean relative error"
    write_chart(
        args.out, _series(rows, metric),
        title=f"{label} vs sample size", x_label="n", y_label=label, log_x=args.log_x,
    )
    print(f"wrote {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covpost",
        description="Covariance posteriors under scale-mixed inverse-Wishart priors: "
                    "simulation, fitting, experiments and verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic i.i.d. dataset CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--sigma0", choices=("identity", "toeplitz", "spectral"), default="identity")
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--lo", type=float, default=1.0)
    p.add_argument("--hi", type=float, default=2.0)
    p.add_argument("--error-dist", choices=("gaussian", "rademacher"), default="gaussian")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run one Gibbs chain on a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--prior", required=True,
                   help="IG_DSIW, LN_DSIW, TN_DSIW, U_DSIW or MATRIX_F")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="prior hyperparameter override, e.g. --set nu=1")
    p.add_argument("--ridge", type=float, default=1.0,
                   help="ridge penalty lambda for the coefficient prior (ignored without X)")
    p.add_argument("--iterations", type=int, default=10000)
    p.add_argument("--burn-in", type=int, default=5000)
    p.add_argument("--thin", type=int, default=5)
    p.add_argument("--sample-b", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-chain", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("experiment", help="run a plan JSON and emit metrics + charts")
    p.add_argument("--plan", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="run the Monte Carlo verification suite")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--envelope-c", type=float, default=4.0,
                   help="constant in the singular-value envelopes")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="re-render a metric CSV as an SVG chart")
    p.add_argument("--metrics", required=True)
    p.add_argument("--metric", choices=tuple(_METRICS), default="relerr")
    p.add_argument("--log-x", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CovpostError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"unexpected error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
