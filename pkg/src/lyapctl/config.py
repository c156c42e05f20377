"""Experiment configuration: flat key=value files, registries, execution.

Config files are flat ``key=value`` text with section prefixes (``flow.``,
``problem.``, ``policy.``, ``init.``, ``out.``) plus bare ``seed`` and
``snapshot.stride``; ``#`` starts a comment. CLI flags override file
values. The seed fully determines sampled initial states, so a config
plus a seed is bit-reproducible.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import flows, objectives
from .engine import BacktrackConfig, run_constant, run_lcm, run_lcr
from .runio import build_summary, write_run_csv, write_summary_json

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config_text",
    "config_from_mapping",
    "build_problem",
    "build_flow",
    "run_experiment",
    "run_suite",
    "FLOW_NAMES",
    "PROBLEM_NAMES",
    "POLICY_NAMES",
]

FLOW_NAMES = ("gd", "momentum", "rmsprop", "pgd")
PROBLEM_NAMES = ("quadratic", "rosenbrock", "norm-power")
POLICY_NAMES = ("lcr", "lcm", "constant")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    flow_name: str = "gd"
    beta1bar: float = 1.0
    eps_a: float = 1e-8
    p: float = 2.0

    problem_name: str = "quadratic"
    n: int = 2
    cond: float = 10.0
    q: float = 1.0

    policy: str = "lcr"
    lam: float = 0.5
    f1: float = 2.0
    f2: float = 2.0
    eta_init: float = 1.0
    epsilon: float = 1e-10
    max_iters: int = 10_000
    max_backtracks: int = 60
    eta_min: float = 1e-16
    accept_slack: float = 0.0
    relative_slack: bool = False
    eta: float = 0.1  # constant policy only

    y0: Optional[list] = None       # explicit full state
    theta0: Optional[list] = None   # explicit parameter block, lifted
    box_lo: float = -2.0
    box_hi: float = 2.0
    box_sample: bool = False
    samples: int = 1

    out_dir: str = "."
    csv_name: str = "trajectory.csv"
    summary_name: str = "summary.json"
    snapshot_stride: Optional[int] = None
    seed: int = 0

    def backtrack_config(self):
        try:
            return BacktrackConfig(
                lam=self.lam,
                f1=self.f1,
                f2=self.f2,
                eta_init=self.eta_init,
                epsilon=self.epsilon,
                max_backtracks=self.max_backtracks,
                eta_min=self.eta_min,
                max_iters=self.max_iters,
                accept_slack=self.accept_slack,
                relative_slack=self.relative_slack,
                snapshot_stride=self.snapshot_stride,
            )
        except ValueError as exc:
            raise ConfigError(f"policy: {exc}") from exc


_BOOL_TRUE = ("1", "true", "yes", "on")
_BOOL_FALSE = ("0", "false", "no", "off")

# key -> (attribute, parser)
_KEY_TABLE = {
    "flow.name": ("flow_name", str),
    "flow.beta1bar": ("beta1bar", float),
    "flow.eps_a": ("eps_a", float),
    "flow.p": ("p", float),
    "problem.name": ("problem_name", str),
    "problem.n": ("n", int),
    "problem.cond": ("cond", float),
    "problem.q": ("q", float),
    "policy.name": ("policy", str),
    "policy.lambda": ("lam", float),
    "policy.f1": ("f1", float),
    "policy.f2": ("f2", float),
    "policy.eta_init": ("eta_init", float),
    "policy.eps": ("epsilon", float),
    "policy.max_iters": ("max_iters", int),
    "policy.max_backtracks": ("max_backtracks", int),
    "policy.eta_min": ("eta_min", float),
    "policy.accept_slack": ("accept_slack", float),
    "policy.relative_slack": ("relative_slack", "bool"),
    "policy.eta": ("eta", float),
    "init.y0": ("y0", "floats"),
    "init.theta0": ("theta0", "floats"),
    "init.box_lo": ("box_lo", float),
    "init.box_hi": ("box_hi", float),
    "init.box": ("box_sample", "bool"),
    "init.samples": ("samples", int),
    "out.dir": ("out_dir", str),
    "out.csv": ("csv_name", str),
    "out.summary": ("summary_name", str),
    "snapshot.stride": ("snapshot_stride", int),
    "seed": ("seed", int),
}


def _parse_value(key, raw, kind):
    try:
        if kind is str:
            return raw
        if kind is int:
            return int(raw)
        if kind is float:
            return math.inf if raw in ("inf", "+inf") else float(raw)
        if kind == "bool":
            low = raw.strip().lower()
            if low in _BOOL_TRUE:
                return True
            if low in _BOOL_FALSE:
                return False
            raise ValueError("expected a boolean")
        if kind == "floats":
            return [float(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from exc
    raise AssertionError(kind)


def parse_config_text(text):
    """Parse key=value lines into a {key: parsed value} mapping."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEY_TABLE:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        _, kind = _KEY_TABLE[key]
        values[key] = _parse_value(key, raw, kind)
    return values


def config_from_mapping(values):
    """Build and validate an ExperimentConfig from parsed key=values."""
    cfg = ExperimentConfig()
    for key, value in values.items():
        if key not in _KEY_TABLE:
            raise ConfigError(f"unknown key {key!r}")
        setattr(cfg, _KEY_TABLE[key][0], value)
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    if cfg.flow_name not in FLOW_NAMES:
        raise ConfigError(f"flow.name: unknown flow {cfg.flow_name!r}")
    if cfg.problem_name not in PROBLEM_NAMES:
        raise ConfigError(f"problem.name: unknown problem {cfg.problem_name!r}")
    if cfg.policy not in POLICY_NAMES:
        raise ConfigError(f"policy.name: unknown policy {cfg.policy!r}")
    if cfg.samples < 1:
        raise ConfigError("init.samples: must be >= 1")
    modes = sum((cfg.y0 is not None, cfg.theta0 is not None, cfg.box_sample))
    if modes > 1:
        raise ConfigError("init: choose one of init.y0, init.theta0, init.box")
    if cfg.samples > 1 and not cfg.box_sample:
        raise ConfigError("init.samples: > 1 requires init.box=true")
    cfg.backtrack_config()
    if cfg.policy == "constant" and not (cfg.eta > 0):
        raise ConfigError("policy.eta: must be > 0")


def build_problem(cfg):
    try:
        if cfg.problem_name == "quadratic":
            return objectives.quadratic_spd(cfg.n, cfg.cond)
        if cfg.problem_name == "rosenbrock":
            return objectives.rosenbrock(cfg.n)
        if cfg.problem_name == "norm-power":
            return objectives.norm_power(cfg.n, cfg.q)
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from exc
    raise ConfigError(f"problem.name: unknown problem {cfg.problem_name!r}")


def build_flow(cfg, problem=None):
    problem = problem if problem is not None else build_problem(cfg)
    try:
        if cfg.flow_name == "gd":
            return flows.make_gd(problem)
        if cfg.flow_name == "momentum":
            return flows.make_momentum(problem, cfg.beta1bar)
        if cfg.flow_name == "rmsprop":
            return flows.make_rmsprop(problem, cfg.eps_a)
        if cfg.flow_name == "pgd":
            return flows.make_pgd(problem, flows.PGDParams(cfg.p))
    except ValueError as exc:
        raise ConfigError(f"flow: {exc}") from exc
    raise ConfigError(f"flow.name: unknown flow {cfg.flow_name!r}")


def lift_theta(fs, theta):
    """Embed a parameter vector into the flow state (v = 0, s = 0)."""
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    if fs.blocks["theta"] == slice(0, fs.dim) and n == fs.dim:
        return theta.copy()
    y = np.zeros(fs.dim)
    sl = fs.blocks["theta"]
    if sl.stop - sl.start != n:
        raise ConfigError(f"init.theta0: expected length {sl.stop - sl.start}, got {n}")
    y[sl] = theta
    return y


def initial_states(cfg, fs):
    """Resolve the initial-state spec into a list of states."""
    if cfg.y0 is not None:
        y = np.asarray(cfg.y0, dtype=float)
        if y.size != fs.dim:
            raise ConfigError(f"init.y0: expected length {fs.dim}, got {y.size}")
        return [y]
    if cfg.theta0 is not None:
        return [lift_theta(fs, cfg.theta0)]
    if cfg.box_sample:
        if not (cfg.box_hi > cfg.box_lo):
            raise ConfigError("init.box_hi must exceed init.box_lo")
        rng = np.random.default_rng(cfg.seed)
        n = fs.blocks["theta"].stop - fs.blocks["theta"].start
        return [
            lift_theta(fs, rng.uniform(cfg.box_lo, cfg.box_hi, size=n))
            for _ in range(cfg.samples)
        ]
    # default: all-ones parameter block
    sl = fs.blocks["theta"]
    return [lift_theta(fs, np.ones(sl.stop - sl.start))]


def echo_config(cfg):
    echo = {}
    for key, (attr, _) in sorted(_KEY_TABLE.items()):
        value = getattr(cfg, attr)
        if isinstance(value, float) and math.isinf(value):
            value = "inf"
        echo[key] = value
    return echo


def _execute(cfg, fs, y0):
    bt = cfg.backtrack_config()
    if cfg.policy == "lcr":
        return run_lcr(fs, y0, bt)
    if cfg.policy == "lcm":
        return run_lcm(fs, y0, bt)
    return run_constant(
        fs,
        y0,
        cfg.eta,
        cfg.max_iters,
        cfg.epsilon,
        snapshot_stride=cfg.snapshot_stride,
        lam=cfg.lam,
    )


def _max_excursion(run, reference):
    """Largest distance of any stored state from a reference point."""
    worst = 0.0
    for state in run.snapshot_states():
        worst = max(worst, float(np.linalg.norm(state - reference)))
    return worst


def run_experiment(cfg, write_outputs=True):
    """Run one experiment config; returns (RunLog or None, summary dict).

    Single-sample configs write a trajectory CSV and a summary JSON.
    Multi-sample configs (init.samples > 1) aggregate over the sampled
    initial states (statuses, max excursion from the known minimizer)
    and write only the summary. Numerical failures are captured in the
    summary status, never raised.
    """
    problem = build_problem(cfg)
    fs = build_flow(cfg, problem)
    states = initial_states(cfg, fs)
    out_dir = Path(cfg.out_dir)
    echo = echo_config(cfg)

    if len(states) == 1:
        run = _execute(cfg, fs, states[0])
        summary = build_summary(run, fs, echo)
        if write_outputs:
            out_dir.mkdir(parents=True, exist_ok=True)
            write_run_csv(run, out_dir / cfg.csv_name, fs.dim)
            write_summary_json(summary, out_dir / cfg.summary_name)
        return run, summary

    reference = None
    if problem.minimizers:
        reference = lift_theta(fs, problem.minimizers[0])
    statuses = {}
    excursion = 0.0
    for y0 in states:
        run = _execute(cfg, fs, y0)
        statuses[run.termination] = statuses.get(run.termination, 0) + 1
        if reference is not None:
            excursion = max(excursion, _max_excursion(run, reference))
    summary = {
        "status": "aggregate",
        "samples": len(states),
        "statuses": statuses,
        "max_excursion": excursion if reference is not None else None,
        "config_echo": echo,
    }
    if write_outputs:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_summary_json(summary, out_dir / cfg.summary_name)
    return None, summary


def _suite_entry(name, path, out_root):
    try:
        values = parse_config_text(Path(path).read_text())
        cfg = config_from_mapping(values)
        cfg.out_dir = str(Path(out_root) / name)
        _, summary = run_experiment(cfg)
        outputs = {"summary": str(Path(cfg.out_dir) / cfg.summary_name)}
        if summary.get("status") != "aggregate":
            outputs["csv"] = str(Path(cfg.out_dir) / cfg.csv_name)
        entry = {"config": str(path), "status": summary["status"], "outputs": outputs}
        if "max_excursion" in summary and summary["max_excursion"] is not None:
            entry["max_excursion"] = summary["max_excursion"]
        return name, entry
    except ConfigError as exc:
        return name, {"config": str(path), "error": f"config error: {exc}"}
    except OSError as exc:
        return name, {"config": str(path), "error": f"io error: {exc}"}


def suite_threads():
    raw = os.environ.get("LYAPCTL_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError as exc:
            raise ConfigError(f"LYAPCTL_THREADS: cannot parse {raw!r}") from exc
    return min(4, os.cpu_count() or 1)


def run_suite(suite_path, out_dir):
    """Execute every config listed in a suite file; write an index JSON.

    Suite lines are ``name = path/to/config`` or a bare config path
    (stem used as the name); per-config failures are recorded in the
    index and do not stop the suite. Returns the index mapping.
    """
    suite_path = Path(suite_path)
    entries = []
    for lineno, line in enumerate(suite_path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" in stripped:
            name, raw = (part.strip() for part in stripped.split("=", 1))
        else:
            name, raw = Path(stripped).stem, stripped
        path = Path(raw)
        if not path.is_absolute():
            path = suite_path.parent / path
        entries.append((name, path))
    seen = set()
    for name, _ in entries:
        if name in seen:
            raise ConfigError(f"suite: duplicate entry name {name!r}")
        seen.add(name)

    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    index = {}
    with ThreadPoolExecutor(max_workers=suite_threads()) as pool:
        futures = [
            pool.submit(_suite_entry, name, path, out_root) for name, path in entries
        ]
        for fut in futures:
            name, entry = fut.result()
            index[name] = entry
    write_summary_json(index, out_root / "index.json")
    return index
