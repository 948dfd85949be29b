"""Mean-convex hulls on voxel grids via discrete mean curvature flow with obstacle."""
from .flow import FlowParams, StepReport, Trajectory, run, step
from .grid import GridError, GridSpec, VoxelSet, measure, symdiff_measure
from .hull import HullParams, HullReport, compare_sets, convex_hull, mean_convex_hull
from .mincut import StepInstance, StepSolution, solve_extremes
from .scenes import SceneSpec, generate
from .sdf import ScalarField, distance_transform, signed_distance
from .stencil import Stencil, build_stencil, perimeter

__version__ = "0.1.0"

__all__ = [
    "FlowParams", "GridError", "GridSpec", "HullParams", "HullReport", "ScalarField",
    "SceneSpec", "StepInstance", "StepReport", "StepSolution", "Stencil", "Trajectory",
    "VoxelSet", "build_stencil", "compare_sets", "convex_hull", "distance_transform",
    "generate", "mean_convex_hull", "measure", "perimeter", "run", "signed_distance",
    "solve_extremes", "step", "symdiff_measure",
]
