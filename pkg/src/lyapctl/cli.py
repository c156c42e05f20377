"""lyapctl command line: run experiments, certify steps, fit rates.

Exit codes: 0 on success (numerical failures are captured in the summary
status field), 2 on configuration errors, 3 on I/O errors.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import certifier
from .config import (
    ConfigError,
    ExperimentConfig,
    build_flow,
    build_problem,
    config_from_mapping,
    parse_config_text,
    run_experiment,
    run_suite,
    validate_config,
)
from .objectives import grad_check
from .runio import run_from_csv

__all__ = ["main"]


def _parse_float(raw):
    return math.inf if raw in ("inf", "+inf") else float(raw)


def _add_problem_flags(p):
    p.add_argument("--problem", choices=("quadratic", "rosenbrock", "norm-power"),
                   default=None, help="objective name")
    p.add_argument("--n", type=int, default=None, help="problem dimension")
    p.add_argument("--cond", type=float, default=None, help="quadratic condition number")
    p.add_argument("--q", type=float, default=None, help="norm-power exponent (q >= 1)")


def _add_flow_flags(p):
    p.add_argument("--flow", choices=("gd", "momentum", "rmsprop", "pgd"),
                   default=None, help="flow name")
    p.add_argument("--beta1bar", type=float, default=None, help="momentum damping")
    p.add_argument("--eps-a", dest="eps_a", type=float, default=None,
                   help="rmsprop denominator offset")
    p.add_argument("--p", type=_parse_float, default=None,
                   help="pgd rescaling exponent (accepts 'inf')")


def _add_policy_flags(p):
    p.add_argument("--policy", choices=("lcr", "lcm", "constant"), default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="decrease fraction in (0,1)")
    p.add_argument("--f1", type=float, default=None, help="rejection divisor (> 1)")
    p.add_argument("--f2", type=float, default=None, help="memory growth factor (> 1)")
    p.add_argument("--eta-init", dest="eta_init", type=float, default=None)
    p.add_argument("--eps", dest="epsilon", type=float, default=None,
                   help="stop threshold on |vdot|")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    p.add_argument("--max-backtracks", dest="max_backtracks", type=int, default=None)
    p.add_argument("--eta-min", dest="eta_min", type=float, default=None)
    p.add_argument("--accept-slack", dest="accept_slack", type=float, default=None)
    p.add_argument("--relative-slack", dest="relative_slack", action="store_true",
                   default=None)
    p.add_argument("--eta", type=float, default=None, help="constant policy step size")


_FLAG_TO_KEY = {
    "flow": "flow.name",
    "beta1bar": "flow.beta1bar",
    "eps_a": "flow.eps_a",
    "p": "flow.p",
    "problem": "problem.name",
    "n": "problem.n",
    "cond": "problem.cond",
    "q": "problem.q",
    "policy": "policy.name",
    "lam": "policy.lambda",
    "f1": "policy.f1",
    "f2": "policy.f2",
    "eta_init": "policy.eta_init",
    "epsilon": "policy.eps",
    "max_iters": "policy.max_iters",
    "max_backtracks": "policy.max_backtracks",
    "eta_min": "policy.eta_min",
    "accept_slack": "policy.accept_slack",
    "relative_slack": "policy.relative_slack",
    "eta": "policy.eta",
    "y0": "init.y0",
    "theta0": "init.theta0",
    "box_lo": "init.box_lo",
    "box_hi": "init.box_hi",
    "box": "init.box",
    "samples": "init.samples",
    "out_dir": "out.dir",
    "csv": "out.csv",
    "summary": "out.summary",
    "stride": "snapshot.stride",
    "seed": "seed",
}


def _parse_vector(raw):
    return [float(tok) for tok in raw.split(",") if tok.strip() != ""]


def _config_from_args(args):
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_text(Path(args.config).read_text()))
    for attr, key in _FLAG_TO_KEY.items():
        if not hasattr(args, attr):
            continue
        val = getattr(args, attr)
        if val is None:
            continue
        if attr in ("y0", "theta0"):
            val = _parse_vector(val)
        values[key] = val
    return config_from_mapping(values)


def _partial_config(args):
    """Flow/problem-only config for the diagnostic subcommands."""
    cfg = ExperimentConfig()
    for attr in ("flow", "problem"):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, "flow_name" if attr == "flow" else "problem_name", val)
    for attr in ("beta1bar", "eps_a", "p", "n", "cond", "q"):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, attr, val)
    validate_config(cfg)
    return cfg


def _emit(payload):
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _cmd_run(args):
    cfg = _config_from_args(args)
    _, summary = run_experiment(cfg)
    _emit(summary)
    return 0


def _cmd_suite(args):
    index = run_suite(args.suite, args.out_dir)
    _emit(index)
    return 0


def _cmd_certify(args):
    cfg = _partial_config(args)
    fs = build_flow(cfg)
    y = np.asarray(_parse_vector(args.state), dtype=float)
    if y.size != fs.dim:
        raise ConfigError(f"--state: expected length {fs.dim}, got {y.size}")
    try:
        cert = certifier.certify_step(
            fs, y, args.lam, grid_points=args.grid_m, bisection_tol=args.bisect_tol
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    except certifier.NotCertifiableError as exc:
        _emit({"certifiable": False, "reason": str(exc)})
        return 0
    eta = cert.eta_max_certified
    from .engine import armijo_gap

    _emit({
        "certifiable": True,
        "eta_max_certified": eta,
        "grid_points": cert.grid_points,
        "bisection_tol": cert.bisection_tol,
        "q_at_eta": certifier.q_eval(fs, y, eta, args.lam, args.grid_m),
        "armijo_gap_at_eta": armijo_gap(fs, y, eta, args.lam),
    })
    return 0


def _cmd_fit_loja(args):
    cfg = _partial_config(args)
    problem = build_problem(cfg)
    run = run_from_csv(args.csv)
    try:
        fit = certifier.lojasiewicz_fit(run, problem, min_gap=args.min_gap)
    except certifier.InsufficientDataError as exc:
        raise ConfigError(str(exc)) from exc
    _emit({"alpha1": fit.alpha1, "c1": fit.c1, "fit_quality": fit.fit_quality})
    return 0


def _report_payload(report):
    return {
        "alpha1": report.alpha1,
        "gamma": report.gamma,
        "alpha2": report.alpha2,
        "regime": report.regime,
        "C1": report.C1,
        "C2": report.C2,
        "C3": report.C3,
        "fit_quality": report.fit_quality,
    }


def _cmd_regime(args):
    try:
        if args.pgd:
            if args.alpha1 is None or args.p is None:
                raise ConfigError("--pgd requires --alpha1 and --p")
            report = certifier.pgd_regime(args.alpha1, args.p, lam=args.lam, c1=args.c1)
        else:
            if args.alpha1 is None or args.gamma is None or args.alpha2 is None:
                raise ConfigError("regime requires --alpha1 --gamma --alpha2 (or --pgd --p)")
            report = certifier.classify_regime(
                args.alpha1, args.gamma, args.alpha2, args.lam, args.c, args.c1, args.c2
            )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit(_report_payload(report))
    return 0


def _cmd_bound(args):
    run = run_from_csv(args.csv)
    if args.r0 is not None:
        r0 = args.r0
    elif run.records:
        r0 = run.records[0].v_before
    else:
        raise ConfigError("--r0 required for an empty trajectory")
    try:
        bound = certifier.gd_rate_bound(run, args.alpha1, args.c1, args.lam, r0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _emit({
        "note": "step sums are weighted by lambda (the proof-consistent form)",
        "r0": r0,
        "r_bounds": list(bound.r_bounds),
        "theta_bounds": list(bound.theta_bounds),
    })
    return 0


def _cmd_grad_check(args):
    cfg = _partial_config(args)
    problem = build_problem(cfg)
    rng = np.random.default_rng(args.seed)
    points = rng.uniform(-2.0, 2.0, size=(args.points, problem.dim))
    report = grad_check(problem, points, h=args.h, tol=args.tol)
    _emit({
        "passed": report.passed,
        "max_error": report.max_error,
        "h": report.h,
        "tol": report.tol,
        "points": args.points,
    })
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lyapctl",
        description="Energy-controlled adaptive step-size optimizers and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("--config", default=None, help="key=value config file")
    _add_flow_flags(p_run)
    _add_problem_flags(p_run)
    _add_policy_flags(p_run)
    p_run.add_argument("--y0", default=None, help="explicit full initial state, comma separated")
    p_run.add_argument("--theta0", default=None, help="initial parameter block, comma separated")
    p_run.add_argument("--box", action="store_true", default=None,
                       help="sample the initial parameter block from a uniform box")
    p_run.add_argument("--box-lo", dest="box_lo", type=float, default=None)
    p_run.add_argument("--box-hi", dest="box_hi", type=float, default=None)
    p_run.add_argument("--samples", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out-dir", dest="out_dir", default=None)
    p_run.add_argument("--csv", default=None, help="trajectory CSV filename")
    p_run.add_argument("--summary", default=None, help="summary JSON filename")
    p_run.add_argument("--stride", type=int, default=None, help="snapshot stride")
    p_run.set_defaults(func=_cmd_run)

    p_suite = sub.add_parser("suite", help="run every config in a suite file")
    p_suite.add_argument("suite", help="suite file listing config paths")
    p_suite.add_argument("--out-dir", dest="out_dir", required=True)
    p_suite.set_defaults(func=_cmd_suite)

    p_cert = sub.add_parser("certify", help="certified step interval at a state")
    _add_flow_flags(p_cert)
    _add_problem_flags(p_cert)
    p_cert.add_argument("--state", required=True, help="state vector, comma separated")
    p_cert.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p_cert.add_argument("--grid-m", dest="grid_m", type=int, default=33)
    p_cert.add_argument("--bisect-tol", dest="bisect_tol", type=float, default=1e-6)
    p_cert.set_defaults(func=_cmd_certify)

    p_fit = sub.add_parser("fit-loja", help="fit the gradient-inequality exponent")
    _add_problem_flags(p_fit)
    p_fit.add_argument("--csv", required=True, help="trajectory CSV")
    p_fit.add_argument("--min-gap", dest="min_gap", type=float, default=1e-13)
    p_fit.set_defaults(func=_cmd_fit_loja)

    p_reg = sub.add_parser("regime", help="classify the convergence regime")
    p_reg.add_argument("--alpha1", type=float, default=None)
    p_reg.add_argument("--gamma", type=float, default=None)
    p_reg.add_argument("--alpha2", type=float, default=None)
    p_reg.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p_reg.add_argument("--c", type=float, default=1.0)
    p_reg.add_argument("--c1", type=float, default=1.0)
    p_reg.add_argument("--c2", type=float, default=1.0)
    p_reg.add_argument("--pgd", action="store_true", help="use the pgd parameter mapping")
    p_reg.add_argument("--p", type=_parse_float, default=None)
    p_reg.set_defaults(func=_cmd_regime)

    p_bound = sub.add_parser("bound", help="value/distance bounds along a run")
    p_bound.add_argument("--csv", required=True, help="trajectory CSV")
    p_bound.add_argument("--alpha1", type=float, required=True)
    p_bound.add_argument("--c1", type=float, required=True)
    p_bound.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p_bound.add_argument("--r0", type=float, default=None,
                         help="initial value gap (default: first V_before)")
    p_bound.set_defaults(func=_cmd_bound)

    p_gc = sub.add_parser("grad-check", help="finite-difference gradient check")
    _add_problem_flags(p_gc)
    p_gc.add_argument("--points", type=int, default=100)
    p_gc.add_argument("--h", type=float, default=1e-6)
    p_gc.add_argument("--tol", type=float, default=1e-5)
    p_gc.add_argument("--seed", type=int, default=0)
    p_gc.set_defaults(func=_cmd_grad_check)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
