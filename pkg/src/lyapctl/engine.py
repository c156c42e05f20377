"""Energy-controlled step-size policies: restart (LCR) and memory (LCM).

A step from y with trial size eta is accepted once

    V(y + eta F(y)) - V(y) <= lambda * eta * vdot(y) + slack,

the Armijo-type decrease test generalized to any flow with an energy
function. On rejection the trial size is divided by f1 and the state is
restored exactly; no roundoff from rejected trials leaks into the run.

The two policies differ only in the trial size opening each outer
iteration: LCR restarts from eta_init, LCM resumes from f2 times the
previously accepted size. A constant-step baseline (plain explicit Euler,
decrease not enforced) is provided for contrast experiments.

Floating-point safeguards the pseudocode-level description leaves open:
the inner loop aborts after max_backtracks rejections or when the trial
size falls below eta_min, and the failure is reported, never silently
accepted.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "BacktrackConfig",
    "StepRecord",
    "RunLog",
    "BacktrackFailure",
    "armijo_gap",
    "ls_backtrack",
    "run_lcr",
    "run_lcm",
    "run_constant",
]

TERMINATIONS = ("converged", "max_iters", "backtrack_failure", "diverged")


class BacktrackFailure(RuntimeError):
    """No acceptable step was found in floating point."""


@dataclass(frozen=True)
class BacktrackConfig:
    """Hyperparameters and safeguards for the step-control loop.

    lam is the decrease fraction in (0,1); f1 > 1 divides rejected trial
    sizes; f2 > 1 grows the LCM trial size after an accepted step;
    epsilon is the stop threshold on |vdot|. accept_slack is an absolute
    slack on the acceptance test (default 0, the exact-arithmetic form);
    relative_slack switches to slack = 1e-12 * (1 + |V(y)|) for
    ill-conditioned problems.
    """

    lam: float = 0.5
    f1: float = 2.0
    f2: float = 2.0
    eta_init: float = 1.0
    epsilon: float = 1e-10
    max_backtracks: int = 60
    eta_min: float = 1e-16
    max_iters: int = 10_000
    accept_slack: float = 0.0
    relative_slack: bool = False
    snapshot_stride: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.lam < 1.0):
            raise ValueError("lam must lie in (0, 1)")
        if not (self.f1 > 1.0):
            raise ValueError("f1 must be > 1")
        if not (self.f2 > 1.0):
            raise ValueError("f2 must be > 1")
        if not (self.eta_init > 0.0):
            raise ValueError("eta_init must be > 0")
        if not (self.epsilon > 0.0):
            raise ValueError("epsilon must be > 0")
        if self.max_backtracks < 0:
            raise ValueError("max_backtracks must be >= 0")
        if not (self.eta_min > 0.0):
            raise ValueError("eta_min must be > 0")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.accept_slack < 0.0:
            raise ValueError("accept_slack must be >= 0")

    def slack_at(self, v):
        if self.relative_slack:
            return 1e-12 * (1.0 + abs(v))
        return self.accept_slack


@dataclass
class StepRecord:
    """One accepted step (or one Euler step for the constant baseline)."""

    iter_index: int
    eta: float
    n_rejections: int
    v_before: float
    v_after: float
    vdot_before: float
    armijo_gap: float
    state_norm: float
    state: Optional[np.ndarray] = None


@dataclass
class RunLog:
    """Per-iteration records plus the termination summary of one run."""

    records: list = field(default_factory=list)
    termination: str = "max_iters"
    final_state: Optional[np.ndarray] = None
    eta_sum: float = 0.0
    wall_iterations: int = 0

    @property
    def etas(self):
        return np.array([r.eta for r in self.records])

    def snapshot_states(self):
        """States stored on snapshot rows, in iteration order."""
        return [r.state for r in self.records if r.state is not None]


class LineSearchResult(NamedTuple):
    eta: float
    y_next: np.ndarray
    n_rejections: int
    v_next: float
    armijo_gap: float


def armijo_gap(fs, y, eta, lam):
    """f(y, eta) = V(y + eta F(y)) - V(y) - lam * eta * vdot(y).

    Returns +inf when the trial state leaves V's domain, so rejection
    logic needs no special casing. Requires V(y) finite and eta > 0.
    """
    if not (eta > 0.0):
        raise ValueError("eta must be > 0")
    y = np.asarray(y, dtype=float)
    v0 = fs.V(y)
    if not math.isfinite(v0):
        raise ValueError("V(y) must be finite")
    v1 = fs.V(y + eta * fs.F(y))
    if v1 == math.inf:
        return math.inf
    return v1 - v0 - lam * eta * fs.vdot(y)


def _backtrack(fs, y, eta_start, cfg, F, v0, vdot0):
    """Walk the ladder {eta_start / f1^k} until the decrease test accepts."""
    slack = cfg.slack_at(v0)
    eta = eta_start
    k = 0
    while True:
        y_trial = y + eta * F
        v_trial = fs.V(y_trial)
        # written so that NaN/inf trial values fall through to rejection
        if v_trial - v0 <= cfg.lam * eta * vdot0 + slack:
            gap = v_trial - v0 - cfg.lam * eta * vdot0
            return LineSearchResult(eta, y_trial, k, v_trial, gap)
        k += 1
        eta = eta / cfg.f1
        if k > cfg.max_backtracks:
            raise BacktrackFailure(
                f"no acceptable step within {cfg.max_backtracks} backtracks"
            )
        if eta < cfg.eta_min:
            raise BacktrackFailure(f"trial step fell below eta_min={cfg.eta_min}")


def ls_backtrack(fs, y, eta_start, cfg):
    """Line search at one state; returns (eta, y_next, n_rejections, ...).

    Accepts the first eta in {eta_start / f1^k, k = 0, 1, ...} whose
    decrease gap is within the configured slack; raises BacktrackFailure
    if k exceeds max_backtracks or eta falls below eta_min.
    """
    if not (eta_start > 0.0):
        raise ValueError("eta_start must be > 0")
    y = np.asarray(y, dtype=float)
    v0 = fs.V(y)
    if not math.isfinite(v0):
        raise ValueError("V(y) must be finite")
    return _backtrack(fs, y, eta_start, cfg, fs.F(y), v0, fs.vdot(y))


def _auto_stride(fs, cfg):
    if cfg.snapshot_stride is not None:
        if cfg.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        return cfg.snapshot_stride
    return 1 if fs.dim <= 10 else 50


def _run_policy(fs, y0, cfg, restart):
    y = np.asarray(y0, dtype=float).copy()
    v = fs.V(y)
    if not math.isfinite(v):
        raise ValueError("V(y0) must be finite")
    stride = _auto_stride(fs, cfg)
    log = RunLog()
    eta_prev = None
    n = 0
    while True:
        vdot = fs.vdot(y)
        if abs(vdot) <= cfg.epsilon:
            log.termination = "converged"
            break
        if n >= cfg.max_iters:
            log.termination = "max_iters"
            break
        if restart or eta_prev is None:
            eta_start = cfg.eta_init
        else:
            eta_start = cfg.f2 * eta_prev
        try:
            res = _backtrack(fs, y, eta_start, cfg, fs.F(y), v, vdot)
        except BacktrackFailure:
            log.termination = "backtrack_failure"
            break
        rec = StepRecord(
            iter_index=n,
            eta=res.eta,
            n_rejections=res.n_rejections,
            v_before=v,
            v_after=res.v_next,
            vdot_before=vdot,
            armijo_gap=res.armijo_gap,
            state_norm=float(np.linalg.norm(res.y_next)),
            state=res.y_next.copy() if n % stride == 0 else None,
        )
        log.records.append(rec)
        log.eta_sum += res.eta
        y = res.y_next
        v = res.v_next
        eta_prev = res.eta
        n += 1
    log.wall_iterations = n
    log.final_state = y.copy()
    if log.records and log.records[-1].state is None:
        log.records[-1].state = y.copy()
    return log


def run_lcr(fs, y0, cfg):
    """Restart policy: every outer iteration opens the search at eta_init.

    Accepted sizes therefore always have the form eta_init / f1^k. Stops
    when |vdot(y)| <= epsilon, at max_iters, or on backtrack failure
    (reported in the termination field, never raised).
    """
    return _run_policy(fs, y0, cfg, restart=True)


def run_lcm(fs, y0, cfg):
    """Memory policy: iteration n >= 1 opens at f2 times the last accepted
    size; the first iteration opens at eta_init. Stopping as in run_lcr."""
    return _run_policy(fs, y0, cfg, restart=False)


def run_constant(fs, y0, eta, max_iters, epsilon, snapshot_stride=None, lam=1.0):
    """Plain explicit Euler baseline with fixed step size.

    The decrease gap V' - V - lam*eta*vdot is recorded per step
    (armijo_gap field) but never enforced. Sets termination="diverged"
    when V exceeds 1e12 * (1 + V(y0)) or a state goes non-finite.
    """
    if not (eta > 0.0):
        raise ValueError("eta must be > 0")
    if not (epsilon > 0.0):
        raise ValueError("epsilon must be > 0")
    y = np.asarray(y0, dtype=float).copy()
    v = fs.V(y)
    if not math.isfinite(v):
        raise ValueError("V(y0) must be finite")
    cap = 1e12 * (1.0 + v)
    stride = snapshot_stride if snapshot_stride is not None else (1 if fs.dim <= 10 else 50)
    log = RunLog()
    n = 0
    while True:
        vdot = fs.vdot(y)
        if abs(vdot) <= epsilon:
            log.termination = "converged"
            break
        if n >= max_iters:
            log.termination = "max_iters"
            break
        y_next = y + eta * fs.F(y)
        v_next = fs.V(y_next)
        finite = bool(np.all(np.isfinite(y_next)))
        rec = StepRecord(
            iter_index=n,
            eta=eta,
            n_rejections=0,
            v_before=v,
            v_after=v_next,
            vdot_before=vdot,
            armijo_gap=v_next - v - lam * eta * vdot if math.isfinite(v_next) else math.inf,
            state_norm=float(np.linalg.norm(y_next)) if finite else math.inf,
            state=y_next.copy() if (finite and n % stride == 0) else None,
        )
        log.records.append(rec)
        log.eta_sum += eta
        y = y_next
        v = v_next
        n += 1
        if not finite or not (v_next <= cap):
            log.termination = "diverged"
            break
    log.wall_iterations = n
    log.final_state = y.copy()
    if log.records and log.records[-1].state is None and np.all(np.isfinite(y)):
        log.records[-1].state = y.copy()
    return log
