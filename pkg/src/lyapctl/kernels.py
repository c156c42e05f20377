"""Hot numeric kernels behind the objective corpus.

Every kernel exists twice: a scalar-loop form compiled with numba and a
vectorized pure-numpy form. The compiled path is used by default; set
``LYAPCTL_NO_NUMBA=1`` (or run without numba installed) to select the
numpy path. The two paths agree to roundoff and are benchmarked against
each other in ``benchmarks/bench_kernels.py``.
"""

import os

import numpy as np

__all__ = [
    "USE_NUMBA",
    "rosenbrock_value",
    "rosenbrock_grad",
    "rosenbrock_quadform",
    "norm_power_value",
    "norm_power_grad",
    "norm_power_quadform",
    "NUMPY_KERNELS",
    "ACTIVE_KERNELS",
]


# ---------------------------------------------------------------------------
# pure-numpy implementations (fallback path, always available)
# ---------------------------------------------------------------------------

def _np_rosenbrock_value(x):
    t = x[1:] - x[:-1] ** 2
    return float(np.sum((1.0 - x[:-1]) ** 2) + 100.0 * np.sum(t**2))


def _np_rosenbrock_grad(x):
    g = np.zeros_like(x)
    t = x[1:] - x[:-1] ** 2
    g[:-1] += -2.0 * (1.0 - x[:-1]) - 400.0 * x[:-1] * t
    g[1:] += 200.0 * t
    return g


def _np_rosenbrock_quadform(x, d):
    a = 2.0 + 1200.0 * x[:-1] ** 2 - 400.0 * x[1:]
    return float(
        np.sum(a * d[:-1] ** 2)
        + 200.0 * np.sum(d[1:] ** 2)
        - 800.0 * np.sum(x[:-1] * d[:-1] * d[1:])
    )


def _np_norm_power_value(x, q):
    r = float(x @ x)
    return r**q


def _np_norm_power_grad(x, q):
    r = float(x @ x)
    if r == 0.0:
        return np.zeros_like(x)
    return (2.0 * q * r ** (q - 1.0)) * x


def _np_norm_power_quadform(x, d, q):
    r = float(x @ x)
    dd = float(d @ d)
    if r == 0.0:
        return 2.0 * dd if q == 1.0 else 0.0
    xd = float(x @ d)
    return 2.0 * q * r ** (q - 1.0) * dd + 4.0 * q * (q - 1.0) * r ** (q - 2.0) * xd**2


# ---------------------------------------------------------------------------
# loop implementations (compiled path)
# ---------------------------------------------------------------------------

def _loop_rosenbrock_value(x):
    acc = 0.0
    for i in range(x.shape[0] - 1):
        a = 1.0 - x[i]
        t = x[i + 1] - x[i] * x[i]
        acc += a * a + 100.0 * t * t
    return acc


def _loop_rosenbrock_grad(x):
    n = x.shape[0]
    g = np.zeros(n)
    for i in range(n - 1):
        t = x[i + 1] - x[i] * x[i]
        g[i] += -2.0 * (1.0 - x[i]) - 400.0 * x[i] * t
        g[i + 1] += 200.0 * t
    return g


def _loop_rosenbrock_quadform(x, d):
    acc = 0.0
    for i in range(x.shape[0] - 1):
        acc += (2.0 + 1200.0 * x[i] * x[i] - 400.0 * x[i + 1]) * d[i] * d[i]
        acc += 200.0 * d[i + 1] * d[i + 1]
        acc += -800.0 * x[i] * d[i] * d[i + 1]
    return acc


def _loop_norm_power_value(x, q):
    r = 0.0
    for i in range(x.shape[0]):
        r += x[i] * x[i]
    return r**q


def _loop_norm_power_grad(x, q):
    n = x.shape[0]
    r = 0.0
    for i in range(n):
        r += x[i] * x[i]
    g = np.zeros(n)
    if r == 0.0:
        return g
    s = 2.0 * q * r ** (q - 1.0)
    for i in range(n):
        g[i] = s * x[i]
    return g


def _loop_norm_power_quadform(x, d, q):
    r = 0.0
    dd = 0.0
    xd = 0.0
    for i in range(x.shape[0]):
        r += x[i] * x[i]
        dd += d[i] * d[i]
        xd += x[i] * d[i]
    if r == 0.0:
        return 2.0 * dd if q == 1.0 else 0.0
    return 2.0 * q * r ** (q - 1.0) * dd + 4.0 * q * (q - 1.0) * r ** (q - 2.0) * xd * xd


# ---------------------------------------------------------------------------
# path selection
# ---------------------------------------------------------------------------

def _env_disables_numba():
    return os.environ.get("LYAPCTL_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


USE_NUMBA = not _env_disables_numba()
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - depends on install
        USE_NUMBA = False

NUMPY_KERNELS = {
    "rosenbrock_value": _np_rosenbrock_value,
    "rosenbrock_grad": _np_rosenbrock_grad,
    "rosenbrock_quadform": _np_rosenbrock_quadform,
    "norm_power_value": _np_norm_power_value,
    "norm_power_grad": _np_norm_power_grad,
    "norm_power_quadform": _np_norm_power_quadform,
}

if USE_NUMBA:
    rosenbrock_value = njit(cache=True)(_loop_rosenbrock_value)
    rosenbrock_grad = njit(cache=True)(_loop_rosenbrock_grad)
    rosenbrock_quadform = njit(cache=True)(_loop_rosenbrock_quadform)
    norm_power_value = njit(cache=True)(_loop_norm_power_value)
    norm_power_grad = njit(cache=True)(_loop_norm_power_grad)
    norm_power_quadform = njit(cache=True)(_loop_norm_power_quadform)
else:
    rosenbrock_value = _np_rosenbrock_value
    rosenbrock_grad = _np_rosenbrock_grad
    rosenbrock_quadform = _np_rosenbrock_quadform
    norm_power_value = _np_norm_power_value
    norm_power_grad = _np_norm_power_grad
    norm_power_quadform = _np_norm_power_quadform

ACTIVE_KERNELS = {
    "rosenbrock_value": rosenbrock_value,
    "rosenbrock_grad": rosenbrock_grad,
    "rosenbrock_quadform": rosenbrock_quadform,
    "norm_power_value": norm_power_value,
    "norm_power_grad": norm_power_grad,
    "norm_power_quadform": norm_power_quadform,
}
