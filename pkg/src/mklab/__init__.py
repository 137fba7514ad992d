"""Exact finite-space transport solvers and duality diagnostics."""

from .core import (
    CostMatrix,
    DominationResult,
    DualityReport,
    InfeasibleError,
    InvariantError,
    IterationLimitError,
    Marginal,
    MKLabError,
    PlanKind,
    PotentialPair,
    ShapeError,
    SolverStats,
    TransportPlan,
    UnboundedError,
    gauge_normalized,
    mixture_plan,
    plan_dominates,
    potential_plan_integral,
    transport_cost,
    verify_exact_coupling,
    verify_sub_coupling,
)
from .solvers import (
    DEFAULT_CONFIG,
    EpsilonSweep,
    SolverConfig,
    dual_sequence,
    estimate_relaxed_primal,
    relaxed_dual_sweep,
    solve_dual,
    solve_partial,
    solve_primal,
    solve_relaxed_dual,
    solve_restricted_primal,
)
from .rotation import (
    OrbitState,
    RotationInstance,
    ap_cost,
    ap_coupling_space,
    birkhoff_level,
    birkhoff_levels,
    ex33_cost,
    first_passage,
    golden_shift,
    graph_mixture_plan,
    level_matrix,
    make_instance,
    mixture_weights,
    shift_graph_plan,
    skew_step,
    step_sign,
    step_signs,
    uniform_marginal,
    zero_cost_plan,
)
from .diagnostics import (
    AttainmentReport,
    BoundRecord,
    CheckResult,
    SequenceDiagnostics,
    attainment_certificate,
    check_ccm_ae,
    check_strong_ccm,
    singular_mass_estimate,
    telescoping_bound_check,
)

__version__ = "0.1.0"
