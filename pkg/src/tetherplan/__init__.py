"""Tether-aware planning for a surface vehicle and an underwater vehicle."""

from .errors import TetherPlanError
from .geometry import Box, Cylinder, ObstacleMap, Sphere, segment_clear, signed_distance
from .metrics import MetricsReport, aggregate, evaluate_run
from .pipeline import run_ablation, run_pipeline
from .planner import PlannerConfig, VehiclePose, plan_leader, plan_pair
from .scenario import Scenario, generate_scenario, load_scenario
from .sync import KinodynamicLimits, OptimizationConfig, traverse_time
from .tether import TetherModel, hang_tether, tether_feasible

__version__ = "0.1.0"

__all__ = [
    "Box", "Cylinder", "KinodynamicLimits", "MetricsReport", "ObstacleMap",
    "OptimizationConfig", "PlannerConfig", "Scenario", "Sphere", "TetherModel",
    "TetherPlanError", "VehiclePose", "aggregate", "evaluate_run", "generate_scenario",
    "hang_tether", "load_scenario", "plan_leader", "plan_pair", "run_ablation",
    "run_pipeline", "segment_clear", "signed_distance", "tether_feasible", "traverse_time",
]
