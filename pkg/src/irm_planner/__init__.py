"""Two-stage base-configuration planner for mobile manipulators.

Stage one plans a discrete base path over inverse-reachability candidates
with a layered-graph search; stage two turns the candidate sets into convex
feasible regions and smooths the path with a penalized L-BFGS refinement.
"""

from .arm import ArmModel, Pose6, forward_kinematics, ik_solve, jacobian, manipulability, planar_two_link
from .config import PlannerConfig, load_config
from .errors import (
    ConfigError,
    DegenerateCluster,
    EmptyRegionSet,
    FormatError,
    InputError,
    PlannerError,
    UnreachableWaypoint,
)
from .graph import (
    BaseConfig,
    DiscretePath,
    LayeredGraph,
    build_graph,
    discretize_trajectory,
    path_length_cost,
    search,
    smoothness_cost,
)
from .irm import BaseCandidate, InverseReachabilityMap, build_irm, irm_load, irm_save, query_irm
from .metrics import MetricsReport, PlanResult, base_length, base_smoothness, ee_error, evaluate
from .pipeline import PipelineResult, run_pipeline
from .reachability import GridSpec, ReachabilityMap, build_rm, enumerate_voxels, rm_load, rm_lookup, rm_save
from .refine import RefineProblem, RefineResult, bind_regions, lbfgs_minimize, make_problem, total_cost, total_gradient
from .regions import ConvexRegion, RegionSet, build_regions, cluster, convex_hull, filter_points, has_hole, sd_gradient, signed_distance

__version__ = "0.1.0"
