"""1D generalized finite element solver for the unsteady Burgers' equation.

Linear hat functions form the partition of unity; solution-tailored
enrichments (exponential boundary layers, boundary Heaviside corrections,
tanh shock profiles) multiply them to form the trial space.  Time stepping is
Crank-Nicolson with a Newton solve per step and a diagonally scaled, perturbed,
iteratively refined linear solver underneath.
"""

from ._kernels import backend as kernel_backend
from .analysis import (
    ErrorSample,
    convergence_rate,
    count_sign_changes,
    error_time_series,
    relative_error,
    relative_errors,
)
from .assembly import (
    advection_pair,
    assemble_advection,
    assemble_advection_tangent,
    assemble_boundary_penalty,
    assemble_mass,
    assemble_neumann,
    assemble_stiffness,
    project_initial_condition,
)
from .config import StudyConfig, load_config, resolve_ic, validate_config
from .enrichment import (
    DofMap,
    EnrichmentRule,
    Exponential,
    HeavisideLastElement,
    ShapeEval,
    TanhShock,
    build_dof_map,
    exponential_rule,
    heaviside_rule,
    local_domain_for_tanh,
    point_table,
    quadrature_table,
    shape_eval,
    tanh_rule,
)
from .linalg import (
    LinearSolveConfig,
    LinearSolveError,
    LinearSolveInfo,
    linear_solve,
    linear_solve_with_info,
)
from .mesh import HatEval, Mesh1D, build_uniform_mesh, hat_eval, patch
from .quadrature import QuadRule, auto_points, gauss_rule, integrate_element
from .reference import (
    CharacteristicsSolution,
    FourierParams,
    FourierSolution,
    FourierTruncationError,
    MovingShockError,
    ReferenceSolution,
    SteadyShockSolution,
    breaking_time,
    fine_fem_reference,
    fourier_solution,
    history_reference,
    inviscid_solution,
    riemann_ic,
    solve_steady_k,
    stability_h_limit,
    steady_state_shock,
)
from .solver import (
    BurgersProblem,
    BurgersSystem,
    NewtonConfig,
    NewtonError,
    SimulationError,
    SolutionHistory,
    TimeConfig,
    evaluate_solution,
    evaluate_solution_derivative,
    newton_solve_timestep,
    run_simulation,
)
from .studies import (
    builtin_study,
    build_rules,
    list_studies,
    run_riemann_gallery,
    run_study,
)

__version__ = "0.1.0"
