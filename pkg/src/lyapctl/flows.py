"""Flow catalog: ODE right-hand sides paired with their energy functions.

Each optimizer is modeled as an explicit-Euler discretization of a flow
y' = F(y) carrying an energy (Lyapunov) function V with closed-form decay
rate vdot(y) = grad V(y)^T F(y) <= 0. The catalog covers:

* gd        y = theta,  F = -grad R,                  V = R
* momentum  y = (v, theta), damped heavy-ball system, V = R + ||v||^2/(2 b1)
* rmsprop   y = (s, theta), squared-gradient memory,  V = 2(R + sum sqrt(e+s))
* pgd       y = theta, gradient rescaled by a power of its norm, V = R

V returns +inf to signal a domain violation (rmsprop square roots); the
step-control loops treat that as an automatic rejection, which keeps them
total without any projection logic.

hess_quadform(y, x) evaluates |F(y)^T H_V(y + x F(y)) F(y)|, the curvature
certificate ingredient; it uses the objective's analytic Hessian form when
available and a documented central-difference fallback otherwise.
"""

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .objectives import Objective

__all__ = [
    "FlowSystem",
    "PGDParams",
    "make_gd",
    "make_momentum",
    "make_rmsprop",
    "make_pgd",
    "eval_flow",
    "sample_state",
]


@dataclass(frozen=True)
class FlowSystem:
    """Immutable bundle of flow evaluators; all members are pure functions."""

    name: str
    dim: int
    blocks: Mapping[str, slice]
    F: Callable[[np.ndarray], np.ndarray]
    V: Callable[[np.ndarray], float]
    vdot: Callable[[np.ndarray], float]
    hess_quadform: Callable[[np.ndarray, float], float]
    objective: Optional[Objective] = None

    def theta(self, y):
        """Extract the parameter block of a state."""
        return np.asarray(y, dtype=float)[self.blocks["theta"]]

    def grad_norm(self, y):
        """||grad R|| at the parameter block, when an objective is attached."""
        if self.objective is None:
            return None
        return self.objective.grad_norm(self.theta(y))


@dataclass(frozen=True)
class PGDParams:
    """Rescaling exponent for pgd; p = math.inf means normalized gradient."""

    p: float

    def __post_init__(self):
        if not (self.p > 1.0):
            raise ValueError("p must be > 1")


def _as_state(y, dim):
    y = np.asarray(y, dtype=float)
    if y.shape != (dim,):
        raise ValueError(f"state must have shape ({dim},), got {y.shape}")
    return y


def _fd_quadform(V, z, d, h):
    """Central second difference of V along d: d^T H_V(z) d + O(h^2)."""
    vp = V(z + h * d)
    vm = V(z - h * d)
    v0 = V(z)
    if not (math.isfinite(vp) and math.isfinite(vm) and math.isfinite(v0)):
        return math.inf
    return (vp - 2.0 * v0 + vm) / (h * h)


def _make_quadform(F, V, analytic):
    """Build hess_quadform; `analytic(z, d)` = d^T H_V(z) d or None."""

    def hess_quadform(y, x):
        d = F(y)
        z = y + x * d
        if analytic is not None:
            q = analytic(z, d)
            if not math.isfinite(q):
                return math.inf
            return abs(q)
        h = max(1e-6, 1e-6 * float(np.linalg.norm(y)))
        q = _fd_quadform(V, z, d, h)
        if not math.isfinite(q):
            return math.inf
        return abs(q)

    return hess_quadform


def make_gd(problem):
    """Gradient flow: F = -grad R, V = R, vdot = -||grad R||^2."""
    n = problem.dim
    grad = problem.gradient
    value = problem.value

    def F(y):
        return -grad(_as_state(y, n))

    def V(y):
        return value(_as_state(y, n))

    def vdot(y):
        g = grad(_as_state(y, n))
        return -float(g @ g)

    analytic = None
    if problem.hess_quadform is not None:
        def analytic(z, d):
            return problem.hess_quadform(z, d)

    return FlowSystem(
        name="gd",
        dim=n,
        blocks={"theta": slice(0, n)},
        F=F,
        V=V,
        vdot=vdot,
        hess_quadform=_make_quadform(F, V, analytic),
        objective=problem,
    )


def make_momentum(problem, beta1bar):
    """Damped heavy-ball flow on y = (v, theta).

    F(v, theta) = (-b1 v - b1 grad R(theta), v) and
    V(v, theta) = R(theta) + ||v||^2 / (2 b1), the unique scaling of the
    b1 = 1 energy that keeps vdot = -||v||^2 for every b1 > 0.
    """
    if not (beta1bar > 0):
        raise ValueError("beta1bar must be > 0")
    b1 = float(beta1bar)
    n = problem.dim
    dim = 2 * n
    grad = problem.gradient
    value = problem.value
    sl_v = slice(0, n)
    sl_t = slice(n, dim)

    def F(y):
        y = _as_state(y, dim)
        v, theta = y[sl_v], y[sl_t]
        out = np.empty(dim)
        out[sl_v] = -b1 * v - b1 * grad(theta)
        out[sl_t] = v
        return out

    def V(y):
        y = _as_state(y, dim)
        v = y[sl_v]
        return value(y[sl_t]) + float(v @ v) / (2.0 * b1)

    def vdot(y):
        y = _as_state(y, dim)
        v = y[sl_v]
        return -float(v @ v)

    analytic = None
    if problem.hess_quadform is not None:
        def analytic(z, d):
            dv, dt = d[sl_v], d[sl_t]
            return float(dv @ dv) / b1 + problem.hess_quadform(z[sl_t], dt)

    return FlowSystem(
        name="momentum",
        dim=dim,
        blocks={"v": sl_v, "theta": sl_t},
        F=F,
        V=V,
        vdot=vdot,
        hess_quadform=_make_quadform(F, V, analytic),
        objective=problem,
    )


def make_rmsprop(problem, eps_a):
    """Squared-gradient memory flow on y = (s, theta).

    F(s, theta) = (-s + grad R(theta)^2, -grad R(theta) / sqrt(eps_a + s))
    componentwise, with V(s, theta) = 2 (R(theta) + sum_i sqrt(eps_a + s_i)).
    V is +inf whenever some eps_a + s_i <= 0; F is still evaluated where
    defined (undefined components come out non-finite).
    """
    if not (eps_a > 0):
        raise ValueError("eps_a must be > 0")
    ea = float(eps_a)
    n = problem.dim
    dim = 2 * n
    grad = problem.gradient
    value = problem.value
    sl_s = slice(0, n)
    sl_t = slice(n, dim)

    def F(y):
        y = _as_state(y, dim)
        s, theta = y[sl_s], y[sl_t]
        g = grad(theta)
        out = np.empty(dim)
        out[sl_s] = -s + g * g
        with np.errstate(invalid="ignore", divide="ignore"):
            out[sl_t] = -g / np.sqrt(ea + s)
        return out

    def V(y):
        y = _as_state(y, dim)
        s = y[sl_s]
        radicands = ea + s
        if np.min(radicands) <= 0.0:
            return math.inf
        return 2.0 * (value(y[sl_t]) + float(np.sum(np.sqrt(radicands))))

    def vdot(y):
        y = _as_state(y, dim)
        s = y[sl_s]
        radicands = ea + s
        if np.min(radicands) <= 0.0:
            return math.nan
        g = grad(y[sl_t])
        roots = np.sqrt(radicands)
        return -float(np.sum(s / roots)) - float(np.sum(g * g / roots))

    analytic = None
    if problem.hess_quadform is not None:
        def analytic(z, d):
            radicands = ea + z[sl_s]
            if np.min(radicands) <= 0.0:
                return math.inf
            ds, dt = d[sl_s], d[sl_t]
            s_part = -0.5 * float(np.sum(ds * ds * radicands**-1.5))
            return s_part + 2.0 * problem.hess_quadform(z[sl_t], dt)

    return FlowSystem(
        name="rmsprop",
        dim=dim,
        blocks={"s": sl_s, "theta": sl_t},
        F=F,
        V=V,
        vdot=vdot,
        hess_quadform=_make_quadform(F, V, analytic),
        objective=problem,
    )


def make_pgd(problem, params):
    """Rescaled gradient flow: F = -grad R / ||grad R||^((p-2)/(p-1)).

    The leading minus makes vdot = grad R . F = -||grad R||^(p/(p-1)) < 0
    off critical points. F = 0 at critical points, so the map is total.
    p = 2 short-circuits to the gd arithmetic exactly; p = inf gives the
    normalized gradient.
    """
    p = params.p
    n = problem.dim
    grad = problem.gradient
    value = problem.value

    if p == 2.0:
        gd = make_gd(problem)
        return FlowSystem(
            name="pgd",
            dim=n,
            blocks=gd.blocks,
            F=gd.F,
            V=gd.V,
            vdot=gd.vdot,
            hess_quadform=gd.hess_quadform,
            objective=problem,
        )

    exponent = 1.0 if math.isinf(p) else (p - 2.0) / (p - 1.0)
    vdot_exponent = 1.0 if math.isinf(p) else p / (p - 1.0)

    def F(y):
        g = grad(_as_state(y, n))
        ng = float(np.linalg.norm(g))
        if ng == 0.0:
            return np.zeros(n)
        return -g / ng**exponent

    def V(y):
        return value(_as_state(y, n))

    def vdot(y):
        g = grad(_as_state(y, n))
        ng = float(np.linalg.norm(g))
        return -(ng**vdot_exponent)

    analytic = None
    if problem.hess_quadform is not None:
        def analytic(z, d):
            return problem.hess_quadform(z, d)

    return FlowSystem(
        name="pgd",
        dim=n,
        blocks={"theta": slice(0, n)},
        F=F,
        V=V,
        vdot=vdot,
        hess_quadform=_make_quadform(F, V, analytic),
        objective=problem,
    )


def eval_flow(fs, y):
    """Evaluate (F(y), V(y), vdot(y)) consistently at one state."""
    y = _as_state(y, fs.dim)
    return fs.F(y), fs.V(y), fs.vdot(y)


def sample_state(fs, rng, lo=-2.0, hi=2.0):
    """Draw a random state inside the flow's natural domain.

    Coordinates are uniform in [lo, hi] except squared-memory blocks
    ("s"), which are kept nonnegative in [0, hi].
    """
    y = rng.uniform(lo, hi, size=fs.dim)
    if "s" in fs.blocks:
        sl = fs.blocks["s"]
        y[sl] = rng.uniform(0.0, hi, size=sl.stop - sl.start)
    return y
