"""Step-size certificates, exponent fitting, and convergence-rate tools.

The certificate machinery works with the curvature majorant

    q(y, eta) = eta * (max_{x in [0, eta]} g(y, x) + 1) + 2 (1 - lam) vdot(y),

where g(y, x) = |F(y)^T H_V(y + x F(y)) F(y)|. q is strictly increasing in
eta and every eta with q(y, eta) <= 0 is guaranteed to pass the decrease
test, so bracketing + bisection on q yields a certified step interval
(0, eta_max]. The inner max is approximated by the max over an M-point
uniform grid, exact for constant-curvature flows.

The rate tools evaluate the discrete Gronwall-type bounds: the power-form
bound sequence (three branches by the exponent), and the gradient-flow
value bound driven by the fitted gradient-inequality exponent. Note that
the value bound weights the accepted-step sum by lam, the form consistent
with applying the Gronwall lemma to V' - V <= -lam * eta / phi'(V)^2.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "CertifiedStep",
    "RegimeReport",
    "NotCertifiableError",
    "InsufficientDataError",
    "g_eval",
    "q_eval",
    "certify_step",
    "lojasiewicz_fit",
    "LojaFit",
    "classify_regime",
    "pgd_regime",
    "gronwall_power_bound",
    "gd_rate_bound",
    "RateBound",
]

REGIMES = ("subexponential", "exponential", "finite_time")

ETA_FLOOR = 1e-16


class NotCertifiableError(RuntimeError):
    """No certifiable step found down to the eta floor."""


class InsufficientDataError(ValueError):
    """Too few usable trajectory records for a fit."""


@dataclass(frozen=True)
class CertifiedStep:
    """Numerical upper end of the certified step interval at a state."""

    y: np.ndarray
    eta_max_certified: float
    grid_points: int
    bisection_tol: float


def g_eval(fs, y, x):
    """Absolute curvature of V along the flow direction, at offset x.

    Returns |F(y)^T H_V(y + x F(y)) F(y)|, or +inf when the evaluation
    point leaves V's domain.
    """
    if x < 0.0:
        raise ValueError("x must be >= 0")
    return float(fs.hess_quadform(np.asarray(y, dtype=float), float(x)))


def q_eval(fs, y, eta, lam, grid_points=33):
    """Certificate value q(y, eta), with the inner max taken on a grid.

    The grid max is a lower bound on the true max, hence the returned q
    is a lower bound on the true q. Returns +inf on domain exit anywhere
    on the grid.
    """
    if not (eta > 0.0):
        raise ValueError("eta must be > 0")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    y = np.asarray(y, dtype=float)
    gmax = 0.0
    for x in np.linspace(0.0, eta, grid_points):
        g = g_eval(fs, y, x)
        if not math.isfinite(g):
            return math.inf
        if g > gmax:
            gmax = g
    return eta * (gmax + 1.0) + 2.0 * (1.0 - lam) * fs.vdot(y)


def certify_step(fs, y, lam, grid_points=33, bisection_tol=1e-6):
    """Largest grid-certified step size at y, by bracketing + bisection.

    Valid because q is strictly increasing in eta. Requires
    vdot(y) < -1e-14 (strictly away from the zero-decay set). Every
    eta <= eta_max_certified then satisfies the decrease test up to grid
    error. Raises NotCertifiableError if even the eta floor fails, which
    only happens through grid under-resolution or y too close to the
    zero-decay set.
    """
    y = np.asarray(y, dtype=float)
    vdot = fs.vdot(y)
    if not (vdot < -1e-14):
        raise ValueError("certify_step requires vdot(y) < -1e-14")

    def q(eta):
        return q_eval(fs, y, eta, lam, grid_points)

    lo = 1.0
    if q(lo) <= 0.0:
        hi = 2.0 * lo
        while q(hi) <= 0.0:
            lo = hi
            hi *= 2.0
    else:
        hi = lo
        lo = hi / 2.0
        while q(lo) > 0.0:
            hi = lo
            lo /= 2.0
            if lo < ETA_FLOOR:
                raise NotCertifiableError(
                    f"q > 0 for every eta down to {ETA_FLOOR}"
                )
    while hi - lo > bisection_tol * lo:
        mid = 0.5 * (lo + hi)
        if q(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return CertifiedStep(
        y=y, eta_max_certified=lo, grid_points=grid_points, bisection_tol=bisection_tol
    )


class LojaFit(NamedTuple):
    alpha1: float
    c1: float
    fit_quality: float


def lojasiewicz_fit(run, obj, min_gap=1e-13):
    """Fit the gradient inequality ||grad R|| >= c1 (R - R*)^(1 - alpha1).

    Least squares of log ||grad R(theta_n)|| against log (R(theta_n) - R*)
    over the run's snapshot states: slope = 1 - alpha1, intercept = log c1.
    Records with value gap <= min_gap are discarded (log of roundoff
    noise); fewer than 10 usable records raises InsufficientDataError.
    """
    states = run.snapshot_states()
    gaps = []
    grads = []
    for y in states:
        y = np.asarray(y, dtype=float)
        if y.shape != (obj.dim,):
            raise ValueError(
                "trajectory states must live in the objective's space; "
                f"got dim {y.size}, expected {obj.dim}"
            )
        gap = obj.value(y) - obj.min_value
        gn = float(np.linalg.norm(obj.gradient(y)))
        if gap > min_gap and gn > 0.0:
            gaps.append(gap)
            grads.append(gn)
    if len(gaps) < 10:
        raise InsufficientDataError(
            f"need at least 10 records with value gap > {min_gap}, got {len(gaps)}"
        )
    x = np.log(np.asarray(gaps))
    ylog = np.log(np.asarray(grads))
    slope, intercept = np.polyfit(x, ylog, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((ylog - pred) ** 2))
    ss_tot = float(np.sum((ylog - np.mean(ylog)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return LojaFit(alpha1=1.0 - float(slope), c1=float(math.exp(intercept)), fit_quality=r2)


@dataclass(frozen=True)
class RegimeReport:
    """Classified convergence regime with the rate constants."""

    alpha1: float
    gamma: float
    alpha2: float
    regime: str
    C1: float
    C2: float
    C3: float
    fit_quality: Optional[float] = None


def classify_regime(alpha1, gamma, alpha2, lam, c, c1, c2, tol=1e-9, fit_quality=None):
    """Compare alpha2 / (1 - alpha1) with gamma and fill the constants.

    Regimes: ratio < gamma subexponential, = gamma (within tol)
    exponential, > gamma finite time. Constants:
    C1 = 1 / (lam c c1^gamma (1 - gamma (1 - alpha1))),
    C2 = lam c c1^gamma c2 (gamma (1 - alpha1) - alpha2), C3 = c2 / C1.
    """
    if not (0.0 < alpha1 < 1.0):
        raise ValueError("alpha1 must lie in (0, 1)")
    if not (gamma >= 0.0):
        raise ValueError("gamma must be >= 0")
    if not (alpha2 <= 1.0):
        raise ValueError("alpha2 must be <= 1")
    if not (gamma * (1.0 - alpha1) < 1.0):
        raise ValueError("gamma * (1 - alpha1) must be < 1")
    if not (lam > 0.0 and c > 0.0 and c1 > 0.0 and c2 > 0.0):
        raise ValueError("lam, c, c1, c2 must be > 0")
    ratio = alpha2 / (1.0 - alpha1)
    if abs(ratio - gamma) <= tol:
        regime = "exponential"
    elif ratio < gamma:
        regime = "subexponential"
    else:
        regime = "finite_time"
    scale = lam * c * c1**gamma
    big_c1 = 1.0 / (scale * (1.0 - gamma * (1.0 - alpha1)))
    big_c2 = scale * c2 * (gamma * (1.0 - alpha1) - alpha2)
    big_c3 = c2 / big_c1
    return RegimeReport(
        alpha1=alpha1,
        gamma=gamma,
        alpha2=alpha2,
        regime=regime,
        C1=big_c1,
        C2=big_c2,
        C3=big_c3,
        fit_quality=fit_quality,
    )


def pgd_regime(alpha1, p, lam=0.5, c1=1.0, fit_quality=None):
    """Regime of the rescaled gradient flow with exponent p.

    Specializes classify_regime with gamma = 1, c = 1,
    alpha2 = (alpha1 + p - 2) / (p - 1) and c2 = c1^(1/(p-1)), so the
    regime reduces to comparing alpha1 with 1/p: below subexponential,
    equal exponential, above finite time.
    """
    if not (p > 1.0):
        raise ValueError("p must be > 1")
    alpha2 = (alpha1 + p - 2.0) / (p - 1.0)
    c2 = c1 ** (1.0 / (p - 1.0))
    return classify_regime(
        alpha1, 1.0, alpha2, lam, 1.0, c1, c2, fit_quality=fit_quality
    )


def gronwall_power_bound(u0, v, alpha):
    """Bound sequence for u' - u <= -v_n u^alpha, length len(v) + 1.

    alpha > 1: power decay 1 / [u0^(1-alpha) + (alpha-1) S_n]^(1/(alpha-1));
    alpha = 1: exponential decay u0 exp(-S_n);
    alpha < 1: (u0^(1-alpha) - (1-alpha) S_n)^(1/(1-alpha)), clipped at 0,
    which reaches 0 exactly once S_n >= u0^(1-alpha) / (1-alpha).
    Here S_n is the running sum of v.
    """
    if u0 < 0.0:
        raise ValueError("u0 must be >= 0")
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0")
    v = np.asarray(v, dtype=float)
    if np.any(v < 0.0):
        raise ValueError("all v_k must be >= 0")
    sums = np.concatenate(([0.0], np.cumsum(v)))
    if u0 == 0.0:
        return np.zeros_like(sums)
    if alpha == 1.0:
        return u0 * np.exp(-sums)
    if alpha > 1.0:
        return (u0 ** (1.0 - alpha) + (alpha - 1.0) * sums) ** (-1.0 / (alpha - 1.0))
    base = u0 ** (1.0 - alpha) - (1.0 - alpha) * sums
    return np.where(base > 0.0, np.maximum(base, 0.0) ** (1.0 / (1.0 - alpha)), 0.0)


class RateBound(NamedTuple):
    r_bounds: np.ndarray
    theta_bounds: np.ndarray


def gd_rate_bound(run, alpha1, c1, lam, r0):
    """Value and distance bounds along a gradient-flow run.

    Evaluates R(theta_n) <= Psi^{-1}(Psi(r0) - lam * sum_{k<n} eta_k) with
    Psi a primitive of x -> c1^{-2} x^(2 alpha1 - 2) (log branch at
    alpha1 = 1/2), together with the distance bound
    (1/lam) * phi(value bound), phi(x) = c1^{-1} x^alpha1 / alpha1.
    Index n = 0 corresponds to the start of the run (bound r0). When the
    argument of Psi^{-1} leaves its domain the value bound is 0 (the
    finite-time branch).
    """
    if not (0.0 < alpha1 < 1.0):
        raise ValueError("alpha1 must lie in (0, 1)")
    if not (c1 > 0.0):
        raise ValueError("c1 must be > 0")
    if not (0.0 < lam < 1.0):
        raise ValueError("lam must lie in (0, 1)")
    if not (r0 >= 0.0):
        raise ValueError("r0 must be >= 0")
    sums = lam * np.concatenate(([0.0], np.cumsum(run.etas)))
    if r0 == 0.0:
        r = np.zeros_like(sums)
    else:
        a = 2.0 * alpha1 - 1.0
        if abs(a) < 1e-9:
            r = r0 * np.exp(-(c1**2) * sums)
        else:
            z = r0**a / (c1**2 * a) - sums
            arg = c1**2 * a * z
            with np.errstate(invalid="ignore"):
                r = np.where(arg > 0.0, np.maximum(arg, 0.0) ** (1.0 / a), 0.0)
    theta = (1.0 / lam) * (r**alpha1) / (c1 * alpha1)
    return RateBound(r_bounds=r, theta_bounds=theta)
