"""Fixed-step world simulation: per-step force evaluation on a frozen
snapshot, heading control, propagation, trigger bookkeeping, the goal-stop
rule, body-overlap detection, and trajectory logging.

Updates are simultaneous (Jacobi-style): every engagement and force in a step
is computed from the pre-step snapshot, never from partially updated robots.
This is what makes the reciprocal-force identity hold exactly in discrete
time and makes runs invariant to the ordering of robots in the scenario file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .control import ControlOutput, desired_heading, heading_controller, wheel_speeds
from .fields import ForceCommand, ForceSource, PFParams, total_force_from_engagements
from .kinematics import (
    BehaviorKind,
    EngagementState,
    PlanarVector,
    RobotState,
    engagement,
    propagate,
)


class ScenarioError(ValueError):
    """A scenario failed validation; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class Scenario:
    """A complete, runnable experiment description."""

    robots: tuple[RobotState, ...]
    params: PFParams
    dt: float = 0.01
    t_max: float = 60.0
    d_wheel: float = 0.35
    r_wheel: float = 0.04
    record_stride: int = 1
    name: str = "scenario"

    def validation_errors(self) -> list[str]:
        errors: list[str] = []
        if not self.robots:
            errors.append("scenario has no robots")
        if not self.dt > 0.0:
            errors.append("dt must be > 0")
        if not self.t_max > 0.0:
            errors.append("t_max must be > 0")
        if self.record_stride < 1:
            errors.append("record_stride must be >= 1")
        if self.d_wheel <= 0.0:
            errors.append("d_wheel must be > 0")
        if self.r_wheel <= 0.0:
            errors.append("r_wheel must be > 0")
        ids = [r.id for r in self.robots]
        if len(set(ids)) != len(ids):
            errors.append(f"duplicate robot ids: {sorted(ids)}")
        known = set(ids)
        for robot in self.robots:
            if robot.behavior is BehaviorKind.ATTACKING:
                if robot.attack_target not in known:
                    errors.append(
                        f"robot {robot.id}: attack target {robot.attack_target} does not exist"
                    )
                elif robot.attack_target == robot.id:
                    errors.append(f"robot {robot.id}: cannot attack itself")
            if robot.behavior in (BehaviorKind.COOPERATIVE, BehaviorKind.NON_COOPERATIVE):
                if robot.goal is None:
                    errors.append(f"robot {robot.id}: {robot.behavior.value} behavior needs a goal")
        return errors

    def validate(self) -> None:
        errors = self.validation_errors()
        if errors:
            raise ScenarioError(errors)

    def sorted_robots(self) -> tuple[RobotState, ...]:
        return tuple(sorted(self.robots, key=lambda r: r.id))


class Event(NamedTuple):
    t: float
    kind: str  # GoalReached | Stopped | BodyOverlap
    ids: tuple[int, ...]


EVENT_GOAL = "GoalReached"
EVENT_STOPPED = "Stopped"
EVENT_OVERLAP = "BodyOverlap"


@dataclass
class RobotTrace:
    x: list[float] = field(default_factory=list)
    y: list[float] = field(default_factory=list)
    phi: list[float] = field(default_factory=list)
    omega: list[float] = field(default_factory=list)
    fx: list[float] = field(default_factory=list)
    fy: list[float] = field(default_factory=list)
    rep_fx: list[float] = field(default_factory=list)
    rep_fy: list[float] = field(default_factory=list)
    active: list[bool] = field(default_factory=list)


@dataclass
class PairTrace:
    r: list[float] = field(default_factory=list)
    theta: list[float] = field(default_factory=list)
    vr: list[float] = field(default_factory=list)
    vth: list[float] = field(default_factory=list)
    vrel: list[float] = field(default_factory=list)
    triggered: list[bool] = field(default_factory=list)


@dataclass
class TrajectoryLog:
    """Time-indexed record of robot states, pair engagements, commands, and events."""

    scenario: Scenario
    t: list[float] = field(default_factory=list)
    robots: dict[int, RobotTrace] = field(default_factory=dict)
    pairs: dict[tuple[int, int], PairTrace] = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)

    def robot_ids(self) -> list[int]:
        return sorted(self.robots)

    def pair_ids(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)

    def has_event(self, kind: str) -> bool:
        return any(e.kind == kind for e in self.events)


class StepResult(NamedTuple):
    world: tuple[RobotState, ...]
    controls: dict[int, ControlOutput]
    engagements: dict[tuple[int, int], EngagementState]
    forces: dict[int, ForceCommand]
    repulsive: dict[int, PlanarVector]


def _evaluate_snapshot(
    world: tuple[RobotState, ...],
    params: PFParams,
    phi_des_held: dict[int, float],
    d_wheel: float,
    r_wheel: float,
) -> tuple[
    dict[int, ControlOutput],
    dict[tuple[int, int], EngagementState],
    dict[int, ForceCommand],
    dict[int, PlanarVector],
]:
    # Engagements once per unordered pair; each robot sees its own orientation
    # through an exact flip, which keeps reciprocal repulsive inputs exact
    # negations in floating point.
    pair_engs: dict[tuple[int, int], EngagementState] = {}
    for a_idx in range(len(world)):
        for b_idx in range(a_idx + 1, len(world)):
            a, b = world[a_idx], world[b_idx]
            pair_engs[(a.id, b.id)] = engagement(a, b, params.eps_v)

    controls: dict[int, ControlOutput] = {}
    forces: dict[int, ForceCommand] = {}
    repulsive: dict[int, PlanarVector] = {}
    for robot in world:
        others = [r for r in world if r.id != robot.id]
        view = {}
        for other in others:
            key = (min(robot.id, other.id), max(robot.id, other.id))
            eng = pair_engs[key]
            view[other.id] = eng if eng.i == robot.id else eng.flipped()

        if robot.active and robot.behavior is not BehaviorKind.STATIONARY:
            command, rep = total_force_from_engagements(robot, others, view, params)
        else:
            command = ForceCommand(PlanarVector(0.0, 0.0), ForceSource.SUM)
            rep = PlanarVector(0.0, 0.0)

        phi_des = desired_heading(command)
        if phi_des is None:
            phi_des = phi_des_held.get(robot.id, robot.heading)
        phi_des_held[robot.id] = phi_des

        if robot.active and robot.behavior is not BehaviorKind.STATIONARY:
            omega = heading_controller(robot.heading, phi_des, params)
        else:
            omega = 0.0
        wheels = wheel_speeds(robot.speed, omega, d_wheel, r_wheel)
        controls[robot.id] = ControlOutput(phi_des, omega, wheels.v_right, wheels.v_left)
        forces[robot.id] = command
        repulsive[robot.id] = rep
    return controls, pair_engs, forces, repulsive


def step(
    world: Iterable[RobotState],
    params: PFParams,
    dt: float,
    phi_des_held: dict[int, float] | None = None,
    d_wheel: float = 0.35,
    r_wheel: float = 0.04,
) -> StepResult:
    """Advance every robot by one step of simultaneous-update simulation.

    All engagements and forces come from the pre-step snapshot; each robot is
    then propagated with its freshly commanded angular rate held constant for
    ``dt``.  Identical inputs produce bit-identical outputs.
    """
    snapshot = tuple(sorted(world, key=lambda r: r.id))
    if phi_des_held is None:
        phi_des_held = {}
    controls, engs, forces, repulsive = _evaluate_snapshot(
        snapshot, params, phi_des_held, d_wheel, r_wheel
    )
    new_world = tuple(propagate(r, controls[r.id].omega, dt) for r in snapshot)
    return StepResult(new_world, controls, engs, forces, repulsive)


def _goal_point(robot: RobotState, world: tuple[RobotState, ...]) -> PlanarVector | None:
    if robot.behavior is BehaviorKind.ATTACKING:
        target = next((r for r in world if r.id == robot.attack_target), None)
        return target.position if target is not None else None
    return robot.goal


def _termination_gated(robot: RobotState) -> bool:
    return robot.behavior in (BehaviorKind.COOPERATIVE, BehaviorKind.ATTACKING)


def run(scenario: Scenario) -> TrajectoryLog:
    """Run a scenario to t_max or until every cooperative/attacking robot stops.

    A robot becomes inactive (speed set to zero, exactly once) when it comes
    within ``goal_tol`` of its goal point; inactive robots persist as
    stationary obstacles.  Body overlap (r below the sum of body radii) is
    recorded as an event on entry and the simulation continues.  The state at
    every ``record_stride``-th step plus the terminal state is logged.
    """
    scenario.validate()
    params = scenario.params
    dt = scenario.dt
    world = scenario.sorted_robots()

    log = TrajectoryLog(scenario=scenario)
    for robot in world:
        log.robots[robot.id] = RobotTrace()
    for a_idx in range(len(world)):
        for b_idx in range(a_idx + 1, len(world)):
            log.pairs[(world[a_idx].id, world[b_idx].id)] = PairTrace()

    phi_des_held: dict[int, float] = {}
    overlapping: dict[tuple[int, int], bool] = {key: False for key in log.pairs}
    radius = {r.id: r.body_radius for r in world}
    contact = {key: radius[key[0]] + radius[key[1]] for key in log.pairs}
    n_steps = int(round(scenario.t_max / dt))

    def record(t: float, controls, engs, forces, repulsive, snapshot) -> None:
        log.t.append(t)
        for robot in snapshot:
            trace = log.robots[robot.id]
            trace.x.append(robot.position.x)
            trace.y.append(robot.position.y)
            trace.phi.append(robot.heading)
            trace.omega.append(controls[robot.id].omega)
            trace.fx.append(forces[robot.id].force.x)
            trace.fy.append(forces[robot.id].force.y)
            trace.rep_fx.append(repulsive[robot.id].x)
            trace.rep_fy.append(repulsive[robot.id].y)
            trace.active.append(robot.active)
        for key, eng in engs.items():
            trace = log.pairs[key]
            trace.r.append(eng.r)
            trace.theta.append(eng.theta)
            trace.vr.append(eng.vr)
            trace.vth.append(eng.vth)
            trace.vrel.append(eng.vrel)
            trace.triggered.append(eng.triggered)

    for k in range(n_steps + 1):
        t = k * dt
        controls, engs, forces, repulsive = _evaluate_snapshot(
            world, params, phi_des_held, scenario.d_wheel, scenario.r_wheel
        )

        # Body-overlap events fire on entry; the run continues regardless.
        for key, eng in engs.items():
            inside = eng.r < contact[key]
            if inside and not overlapping[key]:
                log.events.append(Event(t, EVENT_OVERLAP, key))
            overlapping[key] = inside

        gated = [r for r in world if _termination_gated(r)]
        done = k == n_steps or (bool(gated) and all(not r.active for r in gated))
        if done or k % scenario.record_stride == 0:
            record(t, controls, engs, forces, repulsive, world)
        if done:
            break

        world = tuple(propagate(r, controls[r.id].omega, dt) for r in world)

        # Stop rule: first entry inside goal_tol zeroes the speed for good.
        t_next = (k + 1) * dt
        stopped: list[RobotState] = []
        for robot in world:
            if not robot.active or robot.behavior is BehaviorKind.STATIONARY:
                stopped.append(robot)
                continue
            goal_point = _goal_point(robot, world)
            if goal_point is not None and (robot.position - goal_point).norm() <= params.goal_tol:
                log.events.append(Event(t_next, EVENT_GOAL, (robot.id,)))
                log.events.append(Event(t_next, EVENT_STOPPED, (robot.id,)))
                stopped.append(robot.stopped())
            else:
                stopped.append(robot)
        world = tuple(stopped)

    return log


def min_separation(log: TrajectoryLog, i: int, j: int) -> float:
    """Minimum recorded separation between robots i and j over the run."""
    key = (min(i, j), max(i, j))
    if key not in log.pairs:
        raise ValueError(f"pair {key} not present in log")
    return min(log.pairs[key].r)
