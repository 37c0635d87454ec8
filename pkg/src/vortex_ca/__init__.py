"""Deterministic 2-D collision-avoidance simulator built on dynamic vortex
potential fields, with analytic verification tooling and a scenario CLI."""

from .analysis import (
    ClosedLoopReport,
    InfeasibleGeometry,
    LyapunovReport,
    RegimeKind,
    attacker_standoff,
    closed_loop_rhs,
    collision_course,
    grazing_separation,
    lyapunov,
    multi_lyapunov,
    required_accel,
    simulate_closed_loop,
    turn_radius,
    verify_closed_loop,
)
from .control import ControlOutput, desired_heading, heading_controller, wheel_speeds
from .engine import Scenario, ScenarioError, TrajectoryLog, min_separation, run, step
from .fields import (
    ForceCommand,
    ForceSource,
    GridSpec,
    PFParams,
    attractive_force,
    field_curl_diagnostic,
    nonvortex_repulsive_force,
    saturate,
    total_force,
    vortex_repulsive_force,
)
from .kinematics import (
    BehaviorKind,
    CollisionSingularity,
    EngagementState,
    PlanarVector,
    RobotState,
    SimulationFault,
    engagement,
    propagate,
    relative_speed_from_headings,
    wrap_angle,
)
from .scenarios import PRESETS, load_scenario, save_scenario

__version__ = "0.1.0"

__all__ = [
    "BehaviorKind",
    "ClosedLoopReport",
    "CollisionSingularity",
    "ControlOutput",
    "EngagementState",
    "ForceCommand",
    "ForceSource",
    "GridSpec",
    "InfeasibleGeometry",
    "LyapunovReport",
    "PFParams",
    "PRESETS",
    "PlanarVector",
    "RegimeKind",
    "RobotState",
    "Scenario",
    "ScenarioError",
    "SimulationFault",
    "TrajectoryLog",
    "attacker_standoff",
    "attractive_force",
    "closed_loop_rhs",
    "collision_course",
    "desired_heading",
    "engagement",
    "field_curl_diagnostic",
    "grazing_separation",
    "heading_controller",
    "load_scenario",
    "lyapunov",
    "min_separation",
    "multi_lyapunov",
    "nonvortex_repulsive_force",
    "propagate",
    "relative_speed_from_headings",
    "required_accel",
    "run",
    "saturate",
    "save_scenario",
    "simulate_closed_loop",
    "step",
    "total_force",
    "turn_radius",
    "verify_closed_loop",
    "vortex_repulsive_force",
    "wheel_speeds",
    "wrap_angle",
]
