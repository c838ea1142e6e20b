"""First-order composite solver kit: FISTA, restart schemes, Lasso benchmarks."""

from .model import (
    Box,
    BoxIndicator,
    CompositeProblem,
    Metric,
    ProxCounter,
    ProxStep,
    SmoothPart,
    WeightedL1,
    Zero,
    composite_gradient_map,
    dual_norm,
    objective,
    soft_threshold,
)
from .fista import (
    FistaResult,
    IterationState,
    SolveTrace,
    TSequence,
    fista,
    gradient_norm_below,
)
from .restart import (
    RestartResult,
    RestartRun,
    RestartTrace,
    Scheme,
    exit_function_scheme,
    exit_gradient_scheme,
    exit_lcr,
    exit_optimal_value_scheme,
    lcr_fista,
    no_restart_fista,
    restart_fista,
    run_scheme,
)
from .lasso import (
    LassoProblem,
    LassoSpec,
    generate,
    generate_least_squares,
    gershgorin_metric,
    load_problem,
    save_problem,
)
from .oracles import OracleError, kkt_residual, oracle_fstar, oracle_mu

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BoxIndicator",
    "CompositeProblem",
    "FistaResult",
    "IterationState",
    "LassoProblem",
    "LassoSpec",
    "Metric",
    "OracleError",
    "ProxCounter",
    "ProxStep",
    "RestartResult",
    "RestartRun",
    "RestartTrace",
    "Scheme",
    "SmoothPart",
    "SolveTrace",
    "TSequence",
    "WeightedL1",
    "Zero",
    "composite_gradient_map",
    "dual_norm",
    "exit_function_scheme",
    "exit_gradient_scheme",
    "exit_lcr",
    "exit_optimal_value_scheme",
    "fista",
    "generate",
    "generate_least_squares",
    "gershgorin_metric",
    "gradient_norm_below",
    "kkt_residual",
    "lcr_fista",
    "load_problem",
    "no_restart_fista",
    "objective",
    "oracle_fstar",
    "oracle_mu",
    "restart_fista",
    "run_scheme",
    "save_problem",
    "soft_threshold",
]
