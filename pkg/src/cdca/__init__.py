"""Contractive difference-of-convex algorithms for F = f + g - h."""
from .bench import (
    BenchmarkReport,
    Instance,
    InstanceSpec,
    SolverSetting,
    emit_report,
    generate_instance,
    run_sweep,
    starting_point,
)
from .fixed_point import (
    ContractionAnchor,
    PicardResult,
    SubproblemError,
    apply_map,
    contraction_coefficient,
    picard_solve,
    solve_exact,
)
from .operators import (
    LeastSquaresData,
    RegularizerKind,
    RegularizerSpec,
    build_problem,
    estimate_lipschitz,
    least_squares_gradient,
    logarithmic_split,
    l1_minus_l2_h_subgradient,
    soft_threshold_prox,
)
from .problem import (
    ConvexTerm,
    DCProblem,
    ProxFriendlyTerm,
    SmoothTerm,
    criticality_residual,
    evaluate_objective,
)
from .solvers import (
    RunSummary,
    SolverConfig,
    SolverTrace,
    Termination,
    adca_solve,
    cdca_solve,
    lpm_solve,
    pdca_e_solve,
    pdca_solve,
    tau,
)

__version__ = "0.1.0"
