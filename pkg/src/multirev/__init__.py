"""Multirevolution integrators for highly-oscillatory SDEs with scalar noise."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    InvalidParameter,
    ModelViolation,
    NotACovariance,
    ResourceError,
    StepRejected,
)
from .integrators import (  # noqa: E402
    integrate,
    reference_strong_path,
    solve_averaged_ode,
    step_euler_limit,
    step_exact_rv,
    step_method_a,
    step_method_b,
)
from .problem import OscillatorProblem, SchemeConfig, make_custom, make_kubo, make_nonlinear_kubo  # noqa: E402

__all__ = [
    "ConfigError",
    "DomainError",
    "InvalidParameter",
    "ModelViolation",
    "NotACovariance",
    "OscillatorProblem",
    "ResourceError",
    "SchemeConfig",
    "StepRejected",
    "integrate",
    "make_custom",
    "make_kubo",
    "make_nonlinear_kubo",
    "reference_strong_path",
    "solve_averaged_ode",
    "step_euler_limit",
    "step_exact_rv",
    "step_method_a",
    "step_method_b",
]
