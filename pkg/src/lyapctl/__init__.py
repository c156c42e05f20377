"""lyapctl: energy-controlled adaptive step-size optimizers.

Optimizers are modeled as explicit-Euler discretizations of flows
y' = F(y) carrying an energy function V; trial steps are accepted only
when they realize a fraction of the continuous decrease rate. The
package bundles the flow catalog, the restart/memory step policies, a
certified-step diagnostic, exponent fitting, convergence-rate bounds,
and a CLI experiment harness.
"""

from .certifier import (
    CertifiedStep,
    InsufficientDataError,
    LojaFit,
    NotCertifiableError,
    RateBound,
    RegimeReport,
    certify_step,
    classify_regime,
    g_eval,
    gd_rate_bound,
    gronwall_power_bound,
    lojasiewicz_fit,
    pgd_regime,
    q_eval,
)
from .engine import (
    BacktrackConfig,
    BacktrackFailure,
    RunLog,
    StepRecord,
    armijo_gap,
    ls_backtrack,
    run_constant,
    run_lcm,
    run_lcr,
)
from .flows import (
    FlowSystem,
    PGDParams,
    eval_flow,
    make_gd,
    make_momentum,
    make_pgd,
    make_rmsprop,
    sample_state,
)
from .objectives import (
    GradCheckReport,
    Objective,
    grad_check,
    norm_power,
    quadratic,
    quadratic_spd,
    rosenbrock,
)

__version__ = "0.1.0"

__all__ = [
    "BacktrackConfig",
    "BacktrackFailure",
    "CertifiedStep",
    "FlowSystem",
    "GradCheckReport",
    "InsufficientDataError",
    "LojaFit",
    "NotCertifiableError",
    "Objective",
    "PGDParams",
    "RateBound",
    "RegimeReport",
    "RunLog",
    "StepRecord",
    "armijo_gap",
    "certify_step",
    "classify_regime",
    "eval_flow",
    "g_eval",
    "gd_rate_bound",
    "grad_check",
    "gronwall_power_bound",
    "lojasiewicz_fit",
    "ls_backtrack",
    "make_gd",
    "make_momentum",
    "make_pgd",
    "make_rmsprop",
    "norm_power",
    "pgd_regime",
    "q_eval",
    "quadratic",
    "quadratic_spd",
    "rosenbrock",
    "run_constant",
    "run_lcm",
    "run_lcr",
    "sample_state",
]
