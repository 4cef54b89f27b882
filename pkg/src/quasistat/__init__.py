"""Quasi-static equilibria of parameterized potentials and planning over them.

The building blocks are a potential ``W(z, u)`` with internal states ``z``
and controls ``u``, a Newton solver for its equilibria, the control
Hessian (a Schur complement) with the squared-Hessian path cost, and a
graph planner that lifts a control grid to every stable branch.
"""

from .equilibrium import (
    EquilibriumPoint,
    Stability,
    TangentMap,
    classify_stability,
    find_equilibria,
    solve_equilibrium,
    tangent_map,
    tangent_step,
)
from .errors import (
    ConfigError,
    CriticalControl,
    DegenerateBoundary,
    DimensionError,
    EvaluationError,
    InvalidBounds,
    InvalidPath,
    NonConvergence,
    NoPath,
    QuasistatError,
    SingularJacobian,
)
from .graph import (
    BottomGraph,
    Edge,
    LiftConfig,
    MultiBranchPath,
    TopGraph,
    TopNode,
    build_bottom_grid,
    export_graph,
    import_graph,
    lift,
    match_branch,
    nearest_node,
    sample_fibers,
    shortest_path,
)
from .metric import ControlMetric, control_force, control_hessian, control_metric, path_cost, path_length, squared_hessian
from .pendulum import (
    ContactPendulum,
    LambdaCurve,
    LinearSpringPendulum,
    analytic_control_hessian,
    analytic_equilibrium,
    optimal_control_curve,
    optimal_lambda,
    reduced_potential,
)
from .potential import (
    Configuration,
    PotentialOutput,
    PotentialSystem,
    RotatedControls,
    evaluate_full,
    fd_check_derivatives,
    fiber_distance,
    wrap_angle,
)

__version__ = "0.1.0"

__all__ = [
    "BottomGraph",
    "ConfigError",
    "Configuration",
    "ContactPendulum",
    "ControlMetric",
    "CriticalControl",
    "DegenerateBoundary",
    "DimensionError",
    "Edge",
    "EquilibriumPoint",
    "EvaluationError",
    "InvalidBounds",
    "InvalidPath",
    "LambdaCurve",
    "LiftConfig",
    "LinearSpringPendulum",
    "MultiBranchPath",
    "NoPath",
    "NonConvergence",
    "PotentialOutput",
    "PotentialSystem",
    "QuasistatError",
    "RotatedControls",
    "SingularJacobian",
    "Stability",
    "TangentMap",
    "TopGraph",
    "TopNode",
    "analytic_control_hessian",
    "analytic_equilibrium",
    "build_bottom_grid",
    "classify_stability",
    "control_force",
    "control_hessian",
    "control_metric",
    "evaluate_full",
    "export_graph",
    "fd_check_derivatives",
    "fiber_distance",
    "find_equilibria",
    "import_graph",
    "lift",
    "match_branch",
    "nearest_node",
    "optimal_control_curve",
    "optimal_lambda",
    "path_cost",
    "path_length",
    "reduced_potential",
    "sample_fibers",
    "shortest_path",
    "solve_equilibrium",
    "squared_hessian",
    "tangent_map",
    "tangent_step",
    "wrap_angle",
]
