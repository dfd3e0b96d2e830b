"""Command-line front end.

Subcommands: calibrate (noise scales and committee sizes for a budget),
psq / asq (experiment protocol on a dataset or generator), simulate
(synthetic runs and noise-rate checks), margins (vote-margin histograms),
examples (the two voting fixtures). Everything honoring --seed is
byte-deterministic across runs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .dp_core import (
    PrivacyBudget,
    calibrate_gaussian_sigma,
    calibrate_svt_lambda,
    make_rng,
    svt_threshold_w,
)
from .harness import (
    METHODS,
    ExperimentConfig,
    emit_report,
    parse_libsvm,
    render_margin_csv,
    render_trial_csv,
    run_experiment,
)
from .learners import margin_distribution_report
from .pipelines import compute_k_for_gaussian, compute_svt_params
from .synthdata import (
    TncGenerator,
    VotingFailsFixture,
    gen_massart,
    gen_realizable,
    gen_voting_wins,
)

_CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--dataset", help="LIBSVM file or generator name")
    sub.add_argument("--method", help=f"one of {', '.join(METHODS)}")
    sub.add_argument("--epsilon", type=float)
    sub.add_argument("--delta", type=float)
    sub.add_argument("--trials", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out", help="output file (default: stdout)")
    sub.add_argument("--format", choices=("csv", "json"))
    sub.add_argument("--config", help="JSON file mirroring ExperimentConfig")
    sub.add_argument(
        "--timing",
        action="store_true",
        help="record wall-clock times (breaks byte determinism)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privote",
        description="Private teacher-committee labeling experiments.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    cal = subs.add_parser(
        "calibrate", help="print noise scales and committee sizes for a budget"
    )
    cal.add_argument("--epsilon", type=float, default=1.0)
    cal.add_argument("--delta", type=float, default=1e-5)
    cal.add_argument("--ell", type=int, default=100, help="query count")
    cal.add_argument("--cutoff", type=int, help="unstable cutoff T")
    cal.add_argument(
        "--teacher-n", type=int, default=100, help="per-teacher sample size"
    )
    cal.add_argument("--out")
    cal.set_defaults(func=cmd_calibrate)

    psq = subs.add_parser("psq", help="passive pipeline experiment")
    _add_common(psq)
    psq.set_defaults(
        func=cmd_experiment,
        default_method="PsqGaussian",
        allowed={"PsqGaussian", "PsqSvt", "PsqNoPrivacy"},
    )

    asq = subs.add_parser("asq", help="active pipeline experiment")
    _add_common(asq)
    asq.set_defaults(
        func=cmd_experiment,
        default_method="Asq",
        allowed={"Asq", "AsqNoPrivacy"},
    )

    sim = subs.add_parser("simulate", help="synthetic generators and rate checks")
    _add_common(sim)
    sim.add_argument("--n", type=int, help="synthetic sample size")
    sim.add_argument("--d", type=int, help="feature dimension")
    sim.add_argument("--tau", type=float, help="noise exponent")
    sim.add_argument("--flip", type=float, help="label flip rate")
    sim.add_argument("--c", type=float, help="margin constant")
    sim.add_argument(
        "--rate-check",
        action="store_true",
        help="measure ERM excess-risk rates for the threshold family",
    )
    sim.add_argument("--reps", type=int, default=20)
    sim.set_defaults(
        func=cmd_simulate, default_method="PsqGaussian", allowed=set(METHODS)
    )

    mar = subs.add_parser("margins", help="per-probe vote-margin estimates")
    _add_common(mar)
    mar.add_argument("--teachers", type=int, default=10, help="committee size")
    mar.add_argument("--probes", type=int, default=200)
    mar.add_argument("--reps", type=int, default=30)
    mar.add_argument("--n-per-teacher", type=int, default=100)
    mar.add_argument("--n", type=int, help="synthetic sample size")
    mar.add_argument("--tau", type=float)
    mar.add_argument("--xi", type=float)
    mar.add_argument("--flip", type=float)
    mar.add_argument("--d", type=int)
    mar.set_defaults(func=cmd_margins)

    exa = subs.add_parser("examples", help="the voting-fails and voting-wins fixtures")
    exa.add_argument("--seed", type=int, default=0)
    exa.add_argument("--reps", type=int, default=50)
    exa.add_argument("--xi", type=float, default=0.1)
    exa.add_argument("--domain", type=int, default=10000)
    exa.add_argument("--out")
    exa.set_defaults(func=cmd_examples)

    return parser


def _write_lines(lines: list[str], out: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def cmd_calibrate(args) -> int:
    budget = PrivacyBudget(args.epsilon, args.delta)
    sigma = calibrate_gaussian_sigma(args.ell, budget)
    lines = [
        f"epsilon={budget.epsilon!r}",
        f"delta={budget.delta!r}",
        f"ell={args.ell}",
        f"sigma={sigma!r}",
        f"k_gaussian={compute_k_for_gaussian(args.ell, budget, args.teacher_n)}",
    ]
    if args.cutoff is not None:
        lam = calibrate_svt_lambda(args.cutoff, budget)
        w = svt_threshold_w(lam, args.ell, args.cutoff, budget.delta)
        T, K = compute_svt_params(args.ell, 0.0, 0.05, budget)
        lines += [
            f"cutoff={args.cutoff}",
            f"lambda={lam!r}",
            f"threshold_w={w!r}",
            f"suggested_T={T}",
            f"k_svt={K}",
        ]
    _write_lines(lines, args.out)
    return 0


def _build_config(args) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        unknown = set(data) - _CONFIG_FIELDS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
    overrides = {
        "dataset": args.dataset,
        "method": args.method,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "trials": args.trials,
        "seed": args.seed,
    }
    gen_params = dict(data.get("generator_params", {}))
    for key in ("d", "tau", "flip", "c"):
        value = getattr(args, key, None)
        if value is not None:
            gen_params[key] = value
    if gen_params:
        data["generator_params"] = gen_params
    if getattr(args, "n", None) is not None:
        data["synth_n"] = args.n
    if args.timing:
        data["record_timing"] = True
    data.update({k: v for k, v in overrides.items() if v is not None})
    data.setdefault("method", args.default_method)
    if "fractions" in data:
        data["fractions"] = tuple(data["fractions"])
    if "dataset" not in data:
        raise ValueError("--dataset (or a config file naming one) is required")
    config = ExperimentConfig(**data)
    if config.method not in args.allowed:
        raise ValueError(
            f"method {config.method} is not valid here; "
            f"choose from {sorted(args.allowed)}"
        )
    return config


def _summary_line(summary) -> str:
    return (
        f"{summary.method} on {summary.dataset}: "
        f"accuracy {summary.mean_accuracy:.4f} ± {summary.accuracy_halfwidth:.4f}, "
        f"queries {summary.mean_queries:.1f} ± {summary.queries_halfwidth:.1f} "
        f"({summary.trials} trials)"
    )


def _emit_rows(rows, render_csv, args) -> None:
    fmt = args.format or "csv"
    if args.out:
        emit_report(rows, fmt, args.out)
        return
    if fmt == "csv":
        sys.stdout.write(render_csv(rows))
    else:
        payload = [r.as_row() if hasattr(r, "as_row") else r for r in rows]
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")


def cmd_experiment(args) -> int:
    config = _build_config(args)
    summary, trials = run_experiment(config)
    _emit_rows(trials, render_trial_csv, args)
    print(_summary_line(summary), file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    if args.rate_check:
        return _rate_check(args)
    if args.dataset is None:
        args.dataset = "realizable"
    return cmd_experiment(args)


def _rate_check(args) -> int:
    taus = [args.tau] if args.tau is not None else [1.0, 0.5]
    ns = [2**k for k in range(7, 14)]
    reps = args.reps
    rng = make_rng(args.seed or 0)
    rows = []
    for tau in taus:
        gen = TncGenerator(tau, args.c if args.c is not None else 0.5)
        means = []
        for n in ns:
            excess = [
                gen.excess_error(gen.fit_threshold(*gen.sample_xy(n, rng)))
                for _ in range(reps)
            ]
            means.append(float(np.mean(excess)))
            rows.append(f"{tau!r},{n},{means[-1]!r}")
        slope = np.polyfit(np.log(ns), np.log(means), 1)[0]
        print(f"tau={tau}: log-log excess-risk slope {slope:.3f}", file=sys.stderr)
    _write_lines(["tau,n,mean_excess"] + rows, args.out)
    return 0


def cmd_margins(args) -> int:
    rng = make_rng(args.seed or 0)
    n = args.n or 2000
    name = args.dataset or "realizable"
    if name == "tnc":
        source = TncGenerator(args.tau if args.tau is not None else 0.5)
    elif name == "voting_fails":
        source = VotingFailsFixture()
    elif name == "voting_wins":
        source = gen_voting_wins(args.xi or 0.1, 1000, rng)
    elif name == "realizable":
        source = gen_realizable(args.d or 5, n, rng)[0]
    elif name == "massart":
        source = gen_massart(args.d or 5, n, args.flip or 0.1, rng)[0]
    else:
        source = parse_libsvm(name)
    rows = margin_distribution_report(
        source,
        args.teachers,
        args.probes,
        args.reps,
        rng,
        n_per_teacher=args.n_per_teacher,
    )
    _emit_rows(rows, render_margin_csv, args)
    return 0


def cmd_examples(args) -> int:
    rng = make_rng(args.seed)
    fx = VotingFailsFixture()
    lines = ["[voting fails]"]
    for i in range(3):
        lines.append(f"member {i + 1} error: {fx.member_error(i)!r}")
    lines.append(f"exact majority labels: {fx.exact_majority().tolist()}")
    lines.append(f"exact majority error: {fx.majority_error()!r}")
    mc = fx.aggregate_error_mc(999, 100, args.reps, rng)
    lines.append(f"monte-carlo K=999 aggregate error: {mc!r}")

    lines.append("[voting wins]")
    vw = gen_voting_wins(args.xi, args.domain, rng)
    for K in (50, 100, 200):
        err = vw.aggregate_error(K, rng)
        bound = math.exp(-2.0 * K * args.xi**2)
        lines.append(
            f"K={K}: aggregate error {err!r} (chernoff bound {bound!r})"
        )
    _write_lines(lines, args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # argparse handles its own usage errors
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
