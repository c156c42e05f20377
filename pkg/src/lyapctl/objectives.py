"""Differentiable test objectives with analytic gradients and Hessian forms.

All corpus objectives are shifted so the global minimum value is 0, and
each carries its known minimizers so residual-based diagnostics can be
checked against ground truth. ``norm_power`` additionally records its
analytic gradient-inequality exponent (``meta["loja_alpha"]``), which the
exponent-fitting diagnostics are validated against.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels

__all__ = [
    "Objective",
    "quadratic",
    "quadratic_spd",
    "rosenbrock",
    "norm_power",
    "grad_check",
    "GradCheckReport",
]


@dataclass(frozen=True)
class Objective:
    """Bundle of evaluators for a smooth objective R on R^N.

    value / gradient are total on R^N. hess_quadform(theta, d) returns
    d^T H(theta) d; it may be None, in which case consumers fall back to
    finite differences.
    """

    name: str
    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hess_quadform: Optional[Callable[[np.ndarray, np.ndarray], float]]
    min_value: float = 0.0
    minimizers: tuple = ()
    meta: dict = field(default_factory=dict)

    def grad_norm(self, theta):
        g = self.gradient(np.asarray(theta, dtype=float))
        return float(np.linalg.norm(g))


def quadratic(a_matrix, b=None):
    """Positive-definite quadratic, normalized so min_value = 0.

    R(theta) = 0.5 theta^T A theta + b^T theta - R(theta*), with
    theta* = -A^{-1} b. Rejects non-symmetric or non-PD input.
    """
    a = np.asarray(a_matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("A must be a square matrix")
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-12):
        raise ValueError("A must be symmetric")
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise ValueError("A must be positive definite") from exc
    n = a.shape[0]
    bvec = np.zeros(n) if b is None else np.asarray(b, dtype=float)
    if bvec.shape != (n,):
        raise ValueError("b must have length %d" % n)
    minimizer = np.linalg.solve(a, -bvec)
    offset = 0.5 * float(bvec @ minimizer)

    def value(theta):
        theta = np.asarray(theta, dtype=float)
        return float(0.5 * theta @ (a @ theta) + bvec @ theta - offset)

    def gradient(theta):
        theta = np.asarray(theta, dtype=float)
        return a @ theta + bvec

    def hess_quadform(theta, d):
        d = np.asarray(d, dtype=float)
        return float(d @ (a @ d))

    return Objective(
        name="quadratic",
        dim=n,
        value=value,
        gradient=gradient,
        hess_quadform=hess_quadform,
        min_value=0.0,
        minimizers=(minimizer,),
    )


def quadratic_spd(n, cond=10.0):
    """Diagonal SPD quadratic with eigenvalues geomspaced from 1 to cond."""
    if n < 1:
        raise ValueError("n must be positive")
    if cond < 1.0:
        raise ValueError("cond must be >= 1")
    diag = np.geomspace(1.0, float(cond), n) if n > 1 else np.ones(1)
    return quadratic(np.diag(diag))


def rosenbrock(n):
    """Chained Rosenbrock on R^n (n >= 2), global minimum 0 at all-ones."""
    if n < 2:
        raise ValueError("n must be >= 2")

    def value(theta):
        return float(kernels.rosenbrock_value(np.asarray(theta, dtype=float)))

    def gradient(theta):
        return kernels.rosenbrock_grad(np.asarray(theta, dtype=float))

    def hess_quadform(theta, d):
        return float(
            kernels.rosenbrock_quadform(
                np.asarray(theta, dtype=float), np.asarray(d, dtype=float)
            )
        )

    return Objective(
        name="rosenbrock",
        dim=n,
        value=value,
        gradient=gradient,
        hess_quadform=hess_quadform,
        min_value=0.0,
        minimizers=(np.ones(n),),
    )


def norm_power(n, q):
    """R(theta) = ||theta||^(2q), q >= 1; minimum 0 at the origin.

    The gradient satisfies ||grad R|| = 2q * R^(1 - 1/(2q)) exactly, so the
    exponent metadata is alpha = 1/(2q) with constant c = 2q.
    """
    if n < 1:
        raise ValueError("n must be positive")
    q = float(q)
    if q < 1.0:
        raise ValueError("q must be >= 1")

    def value(theta):
        return float(kernels.norm_power_value(np.asarray(theta, dtype=float), q))

    def gradient(theta):
        return kernels.norm_power_grad(np.asarray(theta, dtype=float), q)

    def hess_quadform(theta, d):
        return float(
            kernels.norm_power_quadform(
                np.asarray(theta, dtype=float), np.asarray(d, dtype=float), q
            )
        )

    return Objective(
        name="norm_power",
        dim=n,
        value=value,
        gradient=gradient,
        hess_quadform=hess_quadform,
        min_value=0.0,
        minimizers=(np.zeros(n),),
        meta={"q": q, "loja_alpha": 1.0 / (2.0 * q), "loja_c": 2.0 * q},
    )


@dataclass(frozen=True)
class GradCheckReport:
    """Per-point max relative errors of central differences vs gradient."""

    errors: tuple
    h: float
    tol: float

    @property
    def passed(self):
        return all(e <= self.tol for e in self.errors)

    @property
    def max_error(self):
        return max(self.errors) if self.errors else 0.0


def grad_check(obj, points, h=1e-6, tol=1e-5):
    """Compare analytic gradients against central finite differences.

    The per-point error is the max componentwise |fd - grad| scaled by
    max(1, ||grad||_inf). Failures never raise; they show up as report
    entries with passed == False.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    errors = []
    for theta in points:
        theta = np.asarray(theta, dtype=float)
        g = obj.gradient(theta)
        fd = np.empty_like(g)
        for i in range(theta.size):
            step = np.zeros_like(theta)
            step[i] = h
            fd[i] = (obj.value(theta + step) - obj.value(theta - step)) / (2.0 * h)
        scale = max(1.0, float(np.max(np.abs(g))))
        errors.append(float(np.max(np.abs(fd - g))) / scale)
    return GradCheckReport(errors=tuple(errors), h=h, tol=tol)
