"""Control-landscape toolkit for a driven three-level lambda system.

Propagation of piecewise-constant pulses, gradient-based landscape climbs
(fixed-step ascent and BFGS), weak-field perturbation diagnostics around
the zero-control critical point, and seeded ensemble experiments.
"""
from .linalg import (
    NotHermitianError,
    herm_eig,
    expm_unitary,
    hermiticity_defect,
    unitarity_defect,
)
from .dynamics import (
    OrderingViolationError,
    normalize_observable,
    PiecewiseControl,
    LambdaSystem,
    default_system,
    propagate,
    objective,
    transition_prob,
    gradient,
    objective_and_gradient,
    finite_diff_gradient,
)
from .perturbation import (
    HorizonTooShortError,
    QuadratureBudgetExceeded,
    PerturbationTerms,
    escape_pulse,
    first_order_amplitude,
    second_order_amplitude,
    dyson_A1,
    dyson_A2,
    dyson_A3,
    dyson_B2,
    predict_delta_J,
)
from .optimize import (
    OptimizerConfig,
    RunRecord,
    grape_run,
    bfgs_run,
)
from .experiments import (
    EnsembleStats,
    random_control,
    run_ensemble,
    sweep_c0,
    quartic_scaling_study,
)

__version__ = "0.1.0"

__all__ = [
    "NotHermitianError",
    "herm_eig",
    "expm_unitary",
    "hermiticity_defect",
    "unitarity_defect",
    "OrderingViolationError",
    "normalize_observable",
    "PiecewiseControl",
    "LambdaSystem",
    "default_system",
    "propagate",
    "objective",
    "transition_prob",
    "gradient",
    "objective_and_gradient",
    "finite_diff_gradient",
    "HorizonTooShortError",
    "QuadratureBudgetExceeded",
    "PerturbationTerms",
    "escape_pulse",
    "first_order_amplitude",
    "second_order_amplitude",
    "dyson_A1",
    "dyson_A2",
    "dyson_A3",
    "dyson_B2",
    "predict_delta_J",
    "OptimizerConfig",
    "RunRecord",
    "grape_run",
    "bfgs_run",
    "EnsembleStats",
    "random_control",
    "run_ensemble",
    "sweep_c0",
    "quartic_scaling_study",
    "__version__",
]
