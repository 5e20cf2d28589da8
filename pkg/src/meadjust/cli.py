"""Command-line harness: simulate, naive, adjust, replicate, evidence.

Exit codes are a stable contract: 0 success, 2 validation error,
3 convergence-gate failure, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from .cohort import CohortConfig, read_cohort, simulate_cohort, write_cohort
from .errors import (
    CohortParseError,
    DegenerateChainError,
    InitializationError,
    InsufficientSamplesError,
    NumericalError,
    ParameterError,
    SingularDesignError,
)
from .evidence import HypothesisPriors, ToyData, delta, marginal_likelihood_null, marginal_likelihood_positive
from .experiment import (
    ExperimentConfig,
    adjust_cell,
    experiment_from_dict,
    provenance_block,
    replication_rows,
    rhat_rows,
    run_replication_grid,
    summary_rows,
    write_table,
)
from .mcmc import McmcConfig, write_traces
from .naive import fit_linear, fit_logistic
from .priors import PRIOR_VARIANT_ORDER
from .rng import Rng

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GATE = 3
EXIT_NUMERICAL = 4


def _comma_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    parser.add_argument("--config", default=None, help="JSON experiment config file")
    parser.add_argument("--out-dir", default="out", help="output directory")
    parser.add_argument(
        "--format",
        default="csv,json,markdown",
        help="comma-separated report formats (csv,json,markdown)",
    )


def _load_config(args) -> ExperimentConfig:
    """Resolve the experiment config: file values, then flag overrides."""
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            cfg = experiment_from_dict(json.load(f))
    else:
        cfg = ExperimentConfig()
    cfg = dataclasses.replace(cfg, out_dir=args.out_dir, formats=tuple(_comma_list(args.format)))
    if args.seed is not None:
        cfg = dataclasses.replace(
            cfg,
            cohort=dataclasses.replace(cfg.cohort, seed=args.seed),
            mcmc=dataclasses.replace(cfg.mcmc, seed=args.seed),
        )
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meadjust",
        description="Simulate exposure-measurement-error cohorts, fit naive "
        "regressions, and run Bayesian measurement-error adjustment.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a cohort CSV")
    _add_common(p_sim)
    p_sim.add_argument("--n", type=int, default=None)
    p_sim.add_argument("--mu-x", type=float, default=None)
    p_sim.add_argument("--tau-x", type=float, default=None)
    p_sim.add_argument("--tau-e", type=float, default=None)
    p_sim.add_argument("--pi", type=float, default=None)
    p_sim.add_argument("--beta-true", type=float, default=None)
    p_sim.add_argument("--alpha-true", type=float, default=None)
    p_sim.add_argument("--tau-y", type=float, default=None)
    p_sim.add_argument("--outcome-kind", choices=["continuous", "binary", "both"], default=None)
    p_sim.add_argument("--out", default=None, help="cohort file path (default OUT_DIR/cohort.csv)")

    p_naive = sub.add_parser("naive", help="naive frequentist fit on a cohort file")
    _add_common(p_naive)
    p_naive.add_argument("cohort")
    p_naive.add_argument("--kind", choices=["linear", "logistic"], required=True)
    p_naive.add_argument(
        "--log-exposure", action="store_true", help="regress on log W instead of W"
    )

    p_adj = sub.add_parser("adjust", help="Bayesian measurement-error adjustment")
    _add_common(p_adj)
    p_adj.add_argument("cohort")
    p_adj.add_argument("--kind", choices=["linear", "logistic"], required=True)
    p_adj.add_argument("--prior", choices=list(PRIOR_VARIANT_ORDER), default="uninformative")
    p_adj.add_argument("--chains", type=int, default=None)
    p_adj.add_argument("--burn-in", type=int, default=None)
    p_adj.add_argument("--keep", type=int, default=None)
    p_adj.add_argument("--thin", type=int, default=None)
    p_adj.add_argument(
        "--init-strategy", choices=["paper_replication", "naive_start"], default=None
    )
    p_adj.add_argument("--log-exposure", action="store_true")
    p_adj.add_argument(
        "--mu-x-normal",
        action="store_true",
        help="use the normal prior on the exposure location in the linear model",
    )
    p_adj.add_argument("--emit-traces", action="store_true")

    p_rep = sub.add_parser("replicate", help="run the prior-variant grid and emit tables")
    _add_common(p_rep)
    p_rep.add_argument("--n", type=int, default=None, help="cohort size override")
    p_rep.add_argument("--kinds", default=None, help="comma-separated subset of linear,logistic")
    p_rep.add_argument(
        "--variants", default=None, help="comma-separated subset of the prior variants"
    )

    p_ev = sub.add_parser("evidence", help="evidence-ratio table on the toy model")
    _add_common(p_ev)
    p_ev.add_argument("--n", type=int, default=1000, help="toy dataset size")
    p_ev.add_argument("--prefixes", default="10,100,1000", help="nested prefix sizes")
    p_ev.add_argument("--p-null", default="0.5,0.25,0.01", help="prior null masses")
    p_ev.add_argument("--sigma-b", type=float, default=1.0)
    p_ev.add_argument("--noise-precision", type=float, default=1.0)

    return parser


# ---------------------------------------------------------------------------
# Subcommand implementations


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    cohort_cfg = cfg.cohort if args.config else CohortConfig()
    if args.seed is not None:
        cohort_cfg = dataclasses.replace(cohort_cfg, seed=args.seed)
    overrides = {
        "n": args.n,
        "mu_x": args.mu_x,
        "tau_x": args.tau_x,
        "tau_e": args.tau_e,
        "pi": args.pi,
        "beta_true": args.beta_true,
        "alpha_true": args.alpha_true,
        "tau_y": args.tau_y,
        "outcome_kind": args.outcome_kind,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    cohort_cfg = dataclasses.replace(cohort_cfg, **overrides)
    cohort = simulate_cohort(cohort_cfg)
    out = args.out or os.path.join(args.out_dir, "cohort.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    write_cohort(cohort, out)
    print(f"wrote {len(cohort)} subjects to {out}")
    return EXIT_OK


def _naive_fit(cohort, kind: str, log_exposure: bool):
    w = np.log(cohort.w_obs) if log_exposure else cohort.w_obs
    if kind == "linear":
        return fit_linear(w, cohort.y)
    return fit_logistic(w, cohort.z)


def _cmd_naive(args) -> int:
    cfg = _load_config(args)
    cohort = read_cohort(args.cohort)
    fit = _naive_fit(cohort, args.kind, args.log_exposure)
    row = {
        "kind": args.kind,
        "intercept": fit.intercept,
        "slope": fit.slope,
        "slope_se": fit.slope_se,
        "ci95_lo": fit.ci95_lo,
        "ci95_hi": fit.ci95_hi,
        "converged": fit.converged,
        "iterations": fit.iterations,
    }
    fields = list(row)
    if args.kind == "logistic":
        row.update(
            odds_ratio=math.exp(fit.slope),
            or_ci95_lo=math.exp(fit.ci95_lo),
            or_ci95_hi=math.exp(fit.ci95_hi),
        )
        fields += ["odds_ratio", "or_ci95_lo", "or_ci95_hi"]
    os.makedirs(args.out_dir, exist_ok=True)
    prov = provenance_block(
        cohort_config=dataclasses.asdict(cohort.config) if cohort.config else None,
        command="naive",
        kind=args.kind,
        log_exposure=args.log_exposure,
    )
    base = os.path.join(args.out_dir, f"naive_{args.kind}")
    written = write_table(base, [row], fields, cfg.formats, prov, title=f"Naive {args.kind} fit")
    if args.kind == "logistic":
        print(
            f"naive {args.kind}: OR {math.exp(fit.slope):.4g} "
            f"(95% CI {math.exp(fit.ci95_lo):.4g} to {math.exp(fit.ci95_hi):.4g})"
        )
    else:
        print(
            f"naive {args.kind}: slope {fit.slope:.4g} "
            f"(95% CI {fit.ci95_lo:.4g} to {fit.ci95_hi:.4g})"
        )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _mcmc_from_args(args, base: McmcConfig) -> McmcConfig:
    overrides = {
        "n_chains": args.chains,
        "burn_in": args.burn_in,
        "keep": args.keep,
        "thin": args.thin,
        "init_strategy": args.init_strategy,
        "seed": args.seed,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(base, **overrides)


def _cmd_adjust(args) -> int:
    cfg = _load_config(args)
    cohort = read_cohort(args.cohort)
    mcmc = _mcmc_from_args(args, cfg.mcmc)
    transform = "log" if args.log_exposure else "identity"
    cell = adjust_cell(
        cohort,
        args.kind,
        args.prior,
        mcmc,
        exposure_transform=transform,
        mu_x_normal=args.mu_x_normal,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    prov = provenance_block(
        cohort_config=dataclasses.asdict(cohort.config) if cohort.config else None,
        command="adjust",
        kind=args.kind,
        prior=args.prior,
        mcmc=dataclasses.asdict(mcmc),
        exposure_transform=transform,
        mu_x_normal=args.mu_x_normal,
    )
    tag = f"{args.kind}_{args.prior}"
    rhat_fields = ["parameter", "rhat", "converged"]
    for i in range(mcmc.n_chains):
        rhat_fields += [f"chain{i}_mean", f"chain{i}_var"]
    written = write_table(
        os.path.join(args.out_dir, f"rhat_{tag}"),
        rhat_rows(cell),
        rhat_fields,
        cfg.formats,
        prov,
        title=f"Convergence, {args.kind} model, {args.prior} prior",
    )
    if args.emit_traces:
        written += write_traces(cell.samples, args.out_dir, prefix=f"trace_{tag}")
    if not cell.converged:
        for path in written:
            print(f"wrote {path}")
        print(
            f"convergence gate failed (R-hat >= 1.1) for: {', '.join(cell.gate_failures)}; "
            "summaries withheld",
            file=sys.stderr,
        )
        return EXIT_GATE
    written += write_table(
        os.path.join(args.out_dir, f"summary_{tag}"),
        summary_rows(cell),
        ["parameter", "mean", "p2_5", "p97_5", "n_retained"],
        cfg.formats,
        prov,
        title=f"Posterior summaries, {args.kind} model, {args.prior} prior",
    )
    t = cell.target
    print(
        f"{args.kind} / {args.prior}: {t.parameter} mean {t.mean:.4g}, "
        f"95% CrI ({t.p2_5:.4g}, {t.p97_5:.4g}), rhat {cell.target_rhat:.4g}"
    )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_replicate(args) -> int:
    cfg = _load_config(args)
    if args.n is not None:
        cfg = dataclasses.replace(cfg, cohort=dataclasses.replace(cfg.cohort, n=args.n))
    if args.kinds:
        cfg = dataclasses.replace(cfg, model_kinds=tuple(_comma_list(args.kinds)))
    if args.variants:
        cfg = dataclasses.replace(cfg, prior_variants=tuple(_comma_list(args.variants)))
    os.makedirs(cfg.out_dir, exist_ok=True)

    cohort = simulate_cohort(cfg.cohort)
    write_cohort(cohort, os.path.join(cfg.out_dir, "cohort.csv"))
    results = run_replication_grid(cfg, cohort=cohort)

    prov = provenance_block(cfg, command="replicate")
    fields = [
        "prior",
        "parameter",
        "mean",
        "p2_5",
        "p97_5",
        "rhat",
        "converged",
        "cri_contains_null",
        "n_retained",
    ]
    any_unconverged = False
    for kind, cells in results.items():
        rows = replication_rows(cells)
        written = write_table(
            os.path.join(cfg.out_dir, f"table_{kind}"),
            rows,
            fields,
            cfg.formats,
            prov,
            title=f"Posterior of the {'odds ratio' if kind == 'logistic' else 'slope'} "
            f"under each measurement-error precision prior ({kind} model)",
        )
        for row in rows:
            status = "ok" if row["converged"] else "UNCONVERGED"
            print(
                f"{kind:9s} {row['prior']:14s} mean {row['mean']:9.4g} "
                f"CrI ({row['p2_5']:9.4g}, {row['p97_5']:9.4g}) "
                f"null-in-CrI={'yes' if row['cri_contains_null'] else 'no'} [{status}]"
            )
            any_unconverged |= not row["converged"]
        for path in written:
            print(f"wrote {path}")
    return EXIT_GATE if any_unconverged else EXIT_OK


def _cmd_evidence(args) -> int:
    cfg = _load_config(args)
    seed = args.seed if args.seed is not None else 0
    prefixes = sorted({int(x) for x in _comma_list(args.prefixes)})
    p_nulls = [float(x) for x in _comma_list(args.p_null)]
    n = max(args.n, max(prefixes))
    rng = Rng(seed, (9,))
    v = rng.standard_normal(n)
    u = rng.standard_normal(n) / math.sqrt(args.noise_precision)

    rows = []
    for m in prefixes:
        data = ToyData(v[:m], u[:m], args.noise_precision)
        log_null = marginal_likelihood_null(data)
        for p0 in p_nulls:
            prior = HypothesisPriors(p_null=p0, sigma_b=args.sigma_b)
            log_pos = marginal_likelihood_positive(data, prior)
            rows.append(
                {
                    "n": m,
                    "p_null": p0,
                    "delta": delta(data, prior),
                    "log_marginal_null": log_null,
                    "log_marginal_positive": log_pos,
                }
            )
    os.makedirs(args.out_dir, exist_ok=True)
    prov = provenance_block(
        command="evidence",
        seed=seed,
        n=n,
        prefixes=prefixes,
        p_null=p_nulls,
        sigma_b=args.sigma_b,
        noise_precision=args.noise_precision,
    )
    written = write_table(
        os.path.join(args.out_dir, "evidence"),
        rows,
        ["n", "p_null", "delta", "log_marginal_null", "log_marginal_positive"],
        cfg.formats,
        prov,
        title="Evidence ratio for the null vs a positive association",
    )
    for row in rows:
        print(f"n={row['n']:6d} p_null={row['p_null']:6.3g} delta={row['delta']:.4g}")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "naive": _cmd_naive,
    "adjust": _cmd_adjust,
    "replicate": _cmd_replicate,
    "evidence": _cmd_evidence,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParameterError, CohortParseError, SingularDesignError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"error: bad config file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InsufficientSamplesError, DegenerateChainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, InitializationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
