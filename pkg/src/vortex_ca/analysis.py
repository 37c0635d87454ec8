"""Analytic oracles and verification: the collision-course predicate, the
closed-loop relative-acceleration right-hand sides for every engagement
regime, the matching Lyapunov functions and derivatives, geometric bounds for
bounded-input maneuvers, and post-hoc checks over trajectory logs.

The closed-loop equations describe the idealized engagement in relative polar
coordinates, where commanded forces act directly as accelerations.  A
constant-speed unicycle can only realize the force component perpendicular to
its velocity, so engine trajectories track these equations qualitatively, not
pointwise; the quantitative finite-difference cross-check therefore runs on
direct integrations of the equations themselves (integration and
differentiation as independent routes), while log-based checks assert the
qualitative certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .engine import EVENT_OVERLAP, EVENT_STOPPED, TrajectoryLog
from .fields import PFParams
from .kinematics import BehaviorKind, EngagementState, wrap_angle


class InfeasibleGeometry(ValueError):
    """No acceleration bound lets the robots avoid grazing at this geometry."""


class RegimeKind(Enum):
    """Which closed-loop engagement a trajectory or equation set belongs to."""

    ATTRACTIVE_ONLY = "attractive_only"
    COOP_PAIR = "coop_pair"
    COOP_VS_NONCOOP = "coop_vs_noncoop"
    COOP_VS_ATTACKER = "coop_vs_attacker"
    NONVORTEX_PAIR = "nonvortex_pair"
    MULTI_ROBOT = "multi_robot"


_REPULSIVE_REGIMES = (
    RegimeKind.COOP_PAIR,
    RegimeKind.COOP_VS_NONCOOP,
    RegimeKind.COOP_VS_ATTACKER,
    RegimeKind.NONVORTEX_PAIR,
)


@dataclass(frozen=True)
class LyapunovReport:
    """One sample of a Lyapunov value with its analytic and numeric derivatives."""

    t: float
    value: float
    derivative_analytic: float
    derivative_numeric: float
    regime: RegimeKind


def collision_course(eng: EngagementState, tol_vth: float = 1e-3) -> bool:
    """True iff the pair is closing with (numerically) zero transverse speed.

    Closing with zero LOS rotation is necessary and sufficient for point
    collision at constant velocities; ``tol_vth`` absorbs the fact that an
    exact zero never holds in floating point.
    """
    return eng.vr < 0.0 and abs(eng.vth) <= tol_vth


def closed_loop_rhs(
    regime: RegimeKind,
    r: float,
    vr: float,
    vth: float,
    vrel: float,
    params: PFParams,
) -> tuple[float, float]:
    """Analytic (dVr/dt, dVth/dt) for the regime's idealized closed loop."""
    if r <= 0.0:
        raise ValueError("closed-loop dynamics need r > 0")
    if regime is RegimeKind.ATTRACTIVE_ONLY:
        return vth * vth / r - params.kappa, -vr * vth / r
    if regime is RegimeKind.MULTI_ROBOT:
        raise ValueError("no single-pair closed form exists for the multi-robot regime")
    if vrel <= 0.0:
        raise ValueError("repulsive regimes need vrel > 0")
    alpha = params.lam / (vrel * r * r)
    if regime is RegimeKind.COOP_PAIR:
        return vth * vth / r + 4.0 * alpha * vr * vth, -vr * vth / r + 2.0 * alpha * vr * vr
    if regime is RegimeKind.COOP_VS_NONCOOP:
        return vth * vth / r + 2.0 * alpha * vr * vth, -vr * vth / r + alpha * vr * vr
    if regime is RegimeKind.COOP_VS_ATTACKER:
        return (
            vth * vth / r + 2.0 * alpha * vr * vth - params.kappa,
            -vr * vth / r + alpha * vr * vr,
        )
    if regime is RegimeKind.NONVORTEX_PAIR:
        return vth * vth / r - 2.0 * alpha * vr * vr, -vr * vth / r + 4.0 * alpha * vr * vth
    raise ValueError(f"unknown regime {regime}")


def lyapunov(
    regime: RegimeKind,
    r: float,
    vr: float,
    vth: float,
    vrel: float,
    params: PFParams,
    n_active: int = 1,
) -> tuple[float, float]:
    """Lyapunov value and its analytic time derivative for the regime.

    ``vrel`` doubles as the constant speed scale where the function needs one:
    for the attractive-only regime it equals the robot speed (exact for a
    stationary goal), and for the non-vortex pair it is the head-on relative
    speed.  ``n_active`` is the count of robots applying repulsive inputs
    and only affects the multi-robot regime.
    """
    if r <= 0.0:
        raise ValueError("lyapunov functions need r > 0")
    if regime is RegimeKind.ATTRACTIVE_ONLY:
        value = params.kappa * r + 0.5 * vth * vth + 0.5 * (vr + vrel) ** 2
        return value, -vrel * (params.kappa - vth * vth / r)
    if vrel <= 0.0:
        raise ValueError("repulsive regimes need vrel > 0")
    alpha = params.lam / (vrel * r * r)
    if regime is RegimeKind.COOP_PAIR:
        value = r + 0.5 * (vth * vth + vr * vr)
        return value, vr * (1.0 + 6.0 * alpha * vr * vth)
    if regime is RegimeKind.COOP_VS_NONCOOP:
        value = r + 0.5 * (vth * vth + vr * vr)
        return value, -abs(vr) * (1.0 + 3.0 * alpha * vr * vth)
    if regime is RegimeKind.COOP_VS_ATTACKER:
        value = params.kappa * r + 0.5 * (vth * vth + vr * vr)
        return value, 3.0 * alpha * vr * vr * vth
    if regime is RegimeKind.NONVORTEX_PAIR:
        # Value offsets Vr by the head-on relative speed; the derivative is the
        # chain rule along the non-vortex closed loop with that offset constant.
        value = r + 0.5 * vth * vth + 0.5 * (vr + vrel) ** 2
        f_r, f_th = closed_loop_rhs(regime, r, vr, vth, vrel, params)
        return value, vr + vth * f_th + (vr + vrel) * f_r
    if regime is RegimeKind.MULTI_ROBOT:
        if n_active < 1:
            raise ValueError("multi-robot regime needs n_active >= 1")
        value = r + 0.5 * (vth * vth + vr * vr)
        return value, -abs(vr) * (1.0 + 3.0 * n_active * alpha * vr * vth)
    raise ValueError(f"unknown regime {regime}")


# ---------------------------------------------------------------------------
# Closed-loop integration and the dual-route finite-difference check


@dataclass
class RelativeTrace:
    """Trajectory of the relative state (r, Vr, Vth) under a closed-loop regime."""

    regime: RegimeKind
    t: np.ndarray
    r: np.ndarray
    vr: np.ndarray
    vth: np.ndarray

    def vrel(self) -> np.ndarray:
        return np.hypot(self.vr, self.vth)


def simulate_closed_loop(
    regime: RegimeKind,
    r0: float,
    vr0: float,
    vth0: float,
    params: PFParams,
    dt: float = 1e-4,
    t_max: float = 20.0,
    r_floor: float = 0.05,
    stop_on_release: bool = True,
) -> RelativeTrace:
    """Integrate the regime's closed-loop relative dynamics with fixed-step RK4.

    Integration stops at ``t_max``, when the separation falls to ``r_floor``,
    or (for repulsive regimes, when ``stop_on_release``) when the closing
    condition Vr < 0 is lost, so the returned window has a single constant
    regime throughout.
    """
    if r0 <= 0.0:
        raise ValueError("r0 must be > 0")

    def deriv(state: tuple[float, float, float]) -> tuple[float, float, float]:
        r, vr, vth = state
        vrel = math.hypot(vr, vth)
        f_r, f_th = closed_loop_rhs(regime, r, vr, vth, vrel, params)
        return vr, f_r, f_th

    repulsive = regime in _REPULSIVE_REGIMES
    ts = [0.0]
    rs = [r0]
    vrs = [vr0]
    vths = [vth0]
    state = (r0, vr0, vth0)
    n_steps = int(round(t_max / dt))
    for k in range(n_steps):
        k1 = deriv(state)
        s2 = tuple(state[m] + 0.5 * dt * k1[m] for m in range(3))
        k2 = deriv(s2)
        s3 = tuple(state[m] + 0.5 * dt * k2[m] for m in range(3))
        k3 = deriv(s3)
        s4 = tuple(state[m] + dt * k3[m] for m in range(3))
        k4 = deriv(s4)
        state = tuple(
            state[m] + dt * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]) / 6.0 for m in range(3)
        )
        ts.append((k + 1) * dt)
        rs.append(state[0])
        vrs.append(state[1])
        vths.append(state[2])
        if state[0] <= r_floor:
            break
        if repulsive and stop_on_release and state[1] >= 0.0:
            break
    return RelativeTrace(
        regime=regime,
        t=np.asarray(ts),
        r=np.asarray(rs),
        vr=np.asarray(vrs),
        vth=np.asarray(vths),
    )


@dataclass(frozen=True)
class ClosedLoopReport:
    """Outcome of the finite-difference vs analytic right-hand-side comparison."""

    regime: RegimeKind
    max_rel_error: float
    t_worst: float
    n_points: int


def verify_closed_loop(
    trace: RelativeTrace,
    params: PFParams,
    regime: RegimeKind | None = None,
) -> ClosedLoopReport:
    """Compare central finite differences of Vr(t), Vth(t) against the analytic
    right-hand sides at every interior sample.

    Errors are normalized by the peak magnitude of the corresponding analytic
    component over the window, so the report is meaningful across the zero
    crossings every engagement passes through.
    """
    if regime is None:
        regime = trace.regime
    t, r, vr, vth = trace.t, trace.r, trace.vr, trace.vth
    if len(t) < 3:
        raise ValueError("need at least 3 samples for a central difference")
    vrel = np.hypot(vr, vth)
    rhs = np.array(
        [
            closed_loop_rhs(regime, float(r[k]), float(vr[k]), float(vth[k]), float(vrel[k]), params)
            for k in range(len(t))
        ]
    )
    span = t[2:] - t[:-2]
    fd_vr = (vr[2:] - vr[:-2]) / span
    fd_vth = (vth[2:] - vth[:-2]) / span
    scale_r = max(float(np.max(np.abs(rhs[:, 0]))), 1e-30)
    scale_th = max(float(np.max(np.abs(rhs[:, 1]))), 1e-30)
    err = np.maximum(
        np.abs(fd_vr - rhs[1:-1, 0]) / scale_r,
        np.abs(fd_vth - rhs[1:-1, 1]) / scale_th,
    )
    worst = int(np.argmax(err))
    return ClosedLoopReport(
        regime=regime,
        max_rel_error=float(err[worst]),
        t_worst=float(t[worst + 1]),
        n_points=len(err),
    )


def closed_loop_errors_from_log(
    log: TrajectoryLog,
    pair: tuple[int, int],
    regime: RegimeKind,
    params: PFParams,
    boundary_skip: int = 2,
) -> ClosedLoopReport | None:
    """Descriptive comparison of a logged engine pair against the idealized
    closed loop, restricted to the interior of triggered intervals.

    Constant-speed robots cannot realize force components along their
    velocity, so this error does not shrink with dt; it is reported for
    inspection, never asserted.
    """
    key = (min(pair), max(pair))
    trace = log.pairs[key]
    triggered = np.asarray(trace.triggered, dtype=bool)
    idx = np.flatnonzero(triggered)
    if len(idx) < 2 * boundary_skip + 3:
        return None
    # Use the longest contiguous triggered window.
    splits = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    window = max(splits, key=len)
    window = window[boundary_skip : len(window) - boundary_skip]
    if len(window) < 3:
        return None
    sub = RelativeTrace(
        regime=regime,
        t=np.asarray(log.t)[window],
        r=np.asarray(trace.r)[window],
        vr=np.asarray(trace.vr)[window],
        vth=np.asarray(trace.vth)[window],
    )
    return verify_closed_loop(sub, params, regime)


# ---------------------------------------------------------------------------
# Geometric bounds for non-point robots with bounded inputs


def turn_radius(speed: float, f_lim: float) -> float:
    """Radius of the circle traced under saturated lateral acceleration."""
    if not f_lim > 0.0:
        raise ValueError("f_lim must be > 0")
    return speed * speed / f_lim


def grazing_separation(r_turn: float, half_separation: float) -> float:
    """Half the minimum center distance in the symmetric saturated head-on maneuver.

    Both robots trace circles of radius ``r_turn`` from an initial lateral
    offset ``half_separation``; zero offset makes the circles touch.
    """
    if not r_turn > 0.0:
        raise ValueError("r_turn must be > 0")
    if half_separation < 0.0:
        raise ValueError("half_separation must be >= 0")
    return math.hypot(r_turn, half_separation) - r_turn


def required_accel(kind: RegimeKind, body_radius: float, speed: float, half_separation: float) -> float:
    """Minimum acceleration bound that avoids grazing for the given engagement.

    Cooperative pairs share the maneuver; against a non-cooperative robot the
    single maneuvering robot needs a strictly larger bound.  Raises
    InfeasibleGeometry when no bound suffices (offset not larger than the
    effective radius).
    """
    v2 = speed * speed
    if kind is RegimeKind.COOP_PAIR:
        denom = half_separation * half_separation - body_radius * body_radius
        if denom <= 0.0:
            raise InfeasibleGeometry(
                f"half separation {half_separation} must exceed body radius {body_radius}"
            )
        return 2.0 * body_radius * v2 / denom
    if kind is RegimeKind.COOP_VS_NONCOOP:
        denom = half_separation * half_separation - 4.0 * body_radius * body_radius
        if denom <= 0.0:
            raise InfeasibleGeometry(
                f"half separation {half_separation} must exceed twice the body radius"
            )
        return 4.0 * body_radius * v2 / denom
    raise ValueError("required_accel is defined for COOP_PAIR and COOP_VS_NONCOOP")


def attacker_standoff(lam: float, speed: float) -> float:
    """Initial separation sufficient for a cooperative robot to evade a pursuer."""
    if lam < 0.0 or speed < 0.0:
        raise ValueError("lam and speed must be >= 0")
    return math.sqrt(3.0 * lam * speed)


def fit_circle(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float, float]:
    """Least-squares circle fit (algebraic/Kasa); returns (cx, cy, radius)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 3:
        raise ValueError("need at least 3 points to fit a circle")
    a = np.column_stack([2.0 * xs, 2.0 * ys, np.ones_like(xs)])
    b = xs * xs + ys * ys
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    cx, cy, c = sol
    return float(cx), float(cy), float(math.sqrt(max(c + cx * cx + cy * cy, 0.0)))


# ---------------------------------------------------------------------------
# Log-based Lyapunov series


def _behavior_of(log: TrajectoryLog, robot_id: int) -> BehaviorKind:
    return next(r.behavior for r in log.scenario.robots if r.id == robot_id)


def multi_lyapunov(log: TrajectoryLog, params: PFParams) -> list[LyapunovReport]:
    """Summed Lyapunov value over all currently triggered pairs, per recorded step.

    The analytic derivative scales with the per-step count of cooperative
    robots that are actively applying repulsive inputs; untriggered steps
    contribute an empty sum (value 0).  The numeric derivative is a central
    difference of the value series (one-sided at the ends).
    """
    n = len(log.t)
    pair_keys = log.pair_ids()
    coop_ids = [
        rid for rid in log.robot_ids() if _behavior_of(log, rid) is BehaviorKind.COOPERATIVE
    ]
    values = np.zeros(n)
    derivs = np.zeros(n)
    for k in range(n):
        triggered_pairs = [key for key in pair_keys if log.pairs[key].triggered[k]]
        engaged = {
            rid
            for rid in coop_ids
            if any(rid in key for key in triggered_pairs) and log.robots[rid].active[k]
        }
        n_active = len(engaged)
        total = 0.0
        dtotal = 0.0
        for key in triggered_pairs:
            trace = log.pairs[key]
            r, vr, vth, vrel = trace.r[k], trace.vr[k], trace.vth[k], trace.vrel[k]
            total += r + 0.5 * (vth * vth + vr * vr)
            if n_active >= 1:
                dtotal += -abs(vr) * (
                    1.0 + 3.0 * n_active * params.lam * vr * vth / (vrel * r * r)
                )
        values[k] = total
        derivs[k] = dtotal

    t = np.asarray(log.t)
    numeric = np.gradient(values, t) if n > 1 else np.zeros(n)
    return [
        LyapunovReport(
            t=float(t[k]),
            value=float(values[k]),
            derivative_analytic=float(derivs[k]),
            derivative_numeric=float(numeric[k]),
            regime=RegimeKind.MULTI_ROBOT,
        )
        for k in range(n)
    ]


def pair_lyapunov_series(
    log: TrajectoryLog,
    pair: tuple[int, int],
    regime: RegimeKind,
    params: PFParams,
) -> list[LyapunovReport]:
    """Per-step Lyapunov value/derivatives for one logged pair under a regime."""
    key = (min(pair), max(pair))
    trace = log.pairs[key]
    t = np.asarray(log.t)
    n = len(t)
    values = np.empty(n)
    derivs = np.empty(n)
    for k in range(n):
        vrel = trace.vrel[k]
        if vrel <= 0.0:
            vrel = params.eps_v
        value, deriv = lyapunov(regime, trace.r[k], trace.vr[k], trace.vth[k], vrel, params)
        values[k] = value
        derivs[k] = deriv
    numeric = np.gradient(values, t) if n > 1 else np.zeros(n)
    return [
        LyapunovReport(
            t=float(t[k]),
            value=float(values[k]),
            derivative_analytic=float(derivs[k]),
            derivative_numeric=float(numeric[k]),
            regime=regime,
        )
        for k in range(n)
    ]


def goal_engagement_series(
    log: TrajectoryLog, robot_id: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(r, theta, vr, vth) of a robot relative to its own stationary goal."""
    robot = next(r for r in log.scenario.robots if r.id == robot_id)
    if robot.goal is None:
        raise ValueError(f"robot {robot_id} has no goal")
    trace = log.robots[robot_id]
    xs = np.asarray(trace.x)
    ys = np.asarray(trace.y)
    phis = np.asarray(trace.phi)
    active = np.asarray(trace.active, dtype=bool)
    speed = np.where(active, robot.speed, 0.0)
    dx = robot.goal.x - xs
    dy = robot.goal.y - ys
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    vr = -speed * np.cos(phis - theta)
    vth = -speed * np.sin(phis - theta)
    return r, theta, vr, vth


# ---------------------------------------------------------------------------
# Regime-specific log checks (drives the analyze command)


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # PASS | FAIL | WARN | INFO
    detail: str

    @property
    def failed(self) -> bool:
        return self.status == "FAIL"


def _check(name: str, ok: bool, detail: str) -> CheckResult:
    return CheckResult(name, "PASS" if ok else "FAIL", detail)


def regime_mismatch(log: TrajectoryLog, regime: RegimeKind) -> str | None:
    """Reason the log cannot belong to the regime, or None when it matches."""
    behaviors = [r.behavior for r in log.scenario.sorted_robots()]
    counts = {kind: behaviors.count(kind) for kind in BehaviorKind}
    vortex = log.scenario.params.vortex
    if regime is RegimeKind.ATTRACTIVE_ONLY:
        if len(behaviors) != 1 or counts[BehaviorKind.COOPERATIVE] != 1:
            return "attractive-only regime needs exactly one cooperative robot"
    elif regime is RegimeKind.COOP_PAIR:
        if len(behaviors) != 2 or counts[BehaviorKind.COOPERATIVE] != 2:
            return "cooperative-pair regime needs exactly two cooperative robots"
        if not vortex:
            return "cooperative-pair regime needs the vortex law enabled"
    elif regime is RegimeKind.COOP_VS_NONCOOP:
        if len(behaviors) != 2 or counts[BehaviorKind.COOPERATIVE] != 1:
            return "regime needs one cooperative and one non-cooperative/stationary robot"
        if counts[BehaviorKind.NON_COOPERATIVE] + counts[BehaviorKind.STATIONARY] != 1:
            return "regime needs one cooperative and one non-cooperative/stationary robot"
    elif regime is RegimeKind.COOP_VS_ATTACKER:
        if len(behaviors) != 2 or counts[BehaviorKind.COOPERATIVE] != 1 or counts[
            BehaviorKind.ATTACKING
        ] != 1:
            return "regime needs one cooperative and one attacking robot"
    elif regime is RegimeKind.NONVORTEX_PAIR:
        if len(behaviors) != 2 or counts[BehaviorKind.COOPERATIVE] != 2:
            return "non-vortex pair regime needs exactly two cooperative robots"
        if vortex:
            return "non-vortex pair regime needs the vortex law disabled"
    elif regime is RegimeKind.MULTI_ROBOT:
        if len(behaviors) < 2 or counts[BehaviorKind.COOPERATIVE] < 2:
            return "multi-robot regime needs at least two cooperative robots"
    return None


def _circle_constraint_check(log: TrajectoryLog) -> CheckResult:
    worst = 0.0
    for trace in log.pairs.values():
        for k in range(len(trace.r)):
            worst = max(
                worst,
                abs(trace.vr[k] ** 2 + trace.vth[k] ** 2 - trace.vrel[k] ** 2),
            )
    return _check("circle_constraint", worst < 1e-9, f"max |Vr^2+Vth^2-Vrel^2| = {worst:.3e}")


def _reciprocity_check(log: TrajectoryLog, tol: float = 1e-12) -> CheckResult:
    (i, j) = log.pair_ids()[0]
    ti, tj = log.robots[i], log.robots[j]
    pair = log.pairs[(i, j)]
    worst = 0.0
    steps = 0
    for k in range(len(log.t)):
        if not pair.triggered[k]:
            continue
        steps += 1
        worst = max(
            worst,
            abs(ti.rep_fx[k] + tj.rep_fx[k]),
            abs(ti.rep_fy[k] + tj.rep_fy[k]),
        )
    return _check(
        "reciprocity",
        steps > 0 and worst <= tol,
        f"max |F_rep_i + F_rep_j| = {worst:.3e} over {steps} triggered steps",
    )


def _instability_certificate(log: TrajectoryLog, params: PFParams) -> CheckResult:
    pair = log.pair_ids()[0]
    series = pair_lyapunov_series(log, pair, RegimeKind.COOP_PAIR, params)
    numeric = [s.derivative_numeric for s in series]
    rs = log.pairs[pair].r
    sign_change_at = None
    for k in range(1, len(numeric)):
        if numeric[k - 1] < 0.0 and numeric[k] > 0.0:
            sign_change_at = k
            break
    min_r = min(rs)
    ok = sign_change_at is not None and rs[sign_change_at] > 0.0 and min_r > 0.0
    detail = (
        f"derivative sign change at t={log.t[sign_change_at]:.3f}, r={rs[sign_change_at]:.3f}, "
        f"min separation {min_r:.3f}"
        if sign_change_at is not None
        else "no negative-to-positive transition found"
    )
    return _check("instability_certificate", ok, detail)


def _no_retrigger_check(log: TrajectoryLog) -> CheckResult:
    pair = log.pairs[log.pair_ids()[0]]
    released = False
    retriggered = False
    for k in range(len(pair.vr)):
        if not released and pair.vr[k] >= 0.0:
            released = True
        elif released and pair.triggered[k]:
            retriggered = True
            break
    return _check(
        "no_retrigger",
        released and not retriggered,
        "trigger stayed off after the first release" if released else "trigger never released",
    )


def _grazing_geometry_check(log: TrajectoryLog, params: PFParams) -> CheckResult | None:
    """Min separation vs the mirrored-circle prediction, for bound-realizing
    head-on pairs (finite f_lim held through the steering channel)."""
    if math.isinf(params.f_lim) or math.isinf(params.omega_max):
        return None
    speeds = {r.speed for r in log.scenario.robots}
    if len(speeds) != 1:
        return None
    speed = speeds.pop()
    if abs(params.omega_max - params.f_lim / speed) > 1e-9:
        return None
    pair = log.pairs[log.pair_ids()[0]]
    if not pair.triggered[0] or abs(pair.vth[0]) > 1e-6:
        return None
    r_turn = turn_radius(speed, params.f_lim)
    predicted = 2.0 * grazing_separation(r_turn, pair.r[0] / 2.0)
    measured = min(pair.r)
    rel = abs(measured - predicted) / predicted
    return _check(
        "grazing_geometry",
        rel < 0.02,
        f"min separation {measured:.4f} vs mirrored-circle prediction {predicted:.4f} "
        f"({rel * 100:.2f}%, tolerance 2%)",
    )


def _straight_line_check(log: TrajectoryLog, robot_id: int) -> CheckResult:
    trace = log.robots[robot_id]
    x0, y0, phi0 = trace.x[0], trace.y[0], trace.phi[0]
    nx, ny = -math.sin(phi0), math.cos(phi0)
    worst = max(abs((x - x0) * nx + (y - y0) * ny) for x, y in zip(trace.x, trace.y))
    return _check(
        "noncooperative_straight_path",
        worst < 1e-9,
        f"max lateral deviation {worst:.3e} m",
    )


def _attacker_checks(log: TrajectoryLog, params: PFParams) -> list[CheckResult]:
    results: list[CheckResult] = []
    robots = log.scenario.sorted_robots()
    coop = next(r for r in robots if r.behavior is BehaviorKind.COOPERATIVE)
    pair_key = log.pair_ids()[0]
    pair = log.pairs[pair_key]

    worst = 0.0
    for k in range(len(log.t)):
        if not pair.triggered[k] or pair.vth[k] < 0.0:
            continue
        deriv = 3.0 * params.lam * pair.vr[k] ** 2 * pair.vth[k] / (pair.vrel[k] * pair.r[k] ** 2)
        worst = min(worst, deriv)
    results.append(
        _check(
            "attacker_certificate",
            worst >= -1e-12,
            f"min Lyapunov derivative over triggered steps with Vth >= 0: {worst:.3e}",
        )
    )

    r0 = pair.r[0]
    standoff = attacker_standoff(params.lam, coop.speed)
    if r0 < standoff:
        results.append(
            CheckResult(
                "standoff_bound",
                "WARN",
                f"initial separation {r0:.3f} below sufficient bound {standoff:.3f}; "
                "avoidance not guaranteed (bound is sufficient only)",
            )
        )
    else:
        # The standoff derivation bounds the Lyapunov-to-range rate ratio by
        # 3*lam*Vrel/(2*r0^2) with r0 the initial separation; pointwise values
        # with the instantaneous r exceed 1 once the dodge closes below r0 and
        # are reported for inspection only.
        worst_bound = 0.0
        worst_inst = 0.0
        for k in range(len(log.t)):
            if not pair.triggered[k]:
                continue
            if pair.vr[k] < 0.0 and pair.vth[k] < 0.0:
                common = 3.0 * params.lam * pair.vr[k] * pair.vth[k] / pair.vrel[k]
                worst_bound = max(worst_bound, abs(common / (r0 * r0)))
                worst_inst = max(worst_inst, abs(common / (pair.r[k] ** 2)))
        results.append(
            _check(
                "ratio_bound",
                worst_bound < 1.0,
                f"max |3*lam*Vr*Vth/(Vrel*r0^2)| = {worst_bound:.4f} on closing steps with Vth < 0",
            )
        )
        results.append(
            CheckResult(
                "ratio_instantaneous",
                "INFO",
                f"same ratio with instantaneous r peaks at {worst_inst:.3f}",
            )
        )

    stop_t = next((e.t for e in log.events if e.kind == EVENT_STOPPED and e.ids == (coop.id,)), None)
    overlaps = [e for e in log.events if e.kind == EVENT_OVERLAP]
    early = [e for e in overlaps if stop_t is None or e.t < stop_t]
    results.append(
        _check(
            "no_overlap_while_active",
            not early,
            f"{len(early)} overlap event(s) before the cooperative robot stopped",
        )
    )
    return results


def _nonvortex_checks(log: TrajectoryLog) -> list[CheckResult]:
    pair = log.pairs[log.pair_ids()[0]]
    worst_vth = max(abs(v) for v in pair.vth)
    overlap_t = next((e.t for e in log.events if e.kind == EVENT_OVERLAP), None)
    monotone = True
    for k in range(1, len(pair.r)):
        if overlap_t is not None and log.t[k] > overlap_t:
            break
        if pair.r[k] >= pair.r[k - 1]:
            monotone = False
            break
    return [
        _check("no_turning", worst_vth < 1e-9, f"max |Vth| = {worst_vth:.3e}"),
        _check("monotone_closing", monotone, "separation decreased monotonically until overlap"),
        _check("overlap_occurred", overlap_t is not None, f"first overlap at t={overlap_t}"),
    ]


def _attractive_only_checks(log: TrajectoryLog) -> list[CheckResult]:
    robot_id = log.robot_ids()[0]
    robot = next(r for r in log.scenario.robots if r.id == robot_id)
    r, theta, vr, _ = goal_engagement_series(log, robot_id)
    phis = np.asarray(log.robots[robot_id].phi)
    active = np.asarray(log.robots[robot_id].active, dtype=bool)
    err = np.abs([wrap_angle(float(p - th)) for p, th in zip(phis, theta)])
    live = np.flatnonzero(active)
    settled_at = None
    for k in live:
        if err[k] < 0.05:
            settled_at = k
            break
    stays = settled_at is not None and bool(np.all(err[live[live >= settled_at]] < 0.05))
    results = [
        _check(
            "heading_converges",
            stays,
            f"|heading - LOS| < 0.05 rad from t={log.t[settled_at]:.2f} on"
            if settled_at is not None
            else "heading never settled near the LOS",
        )
    ]
    last_live = int(live[-1])
    results.append(
        _check(
            "closing_at_speed",
            abs(vr[last_live] + robot.speed) < 1e-3,
            f"final active Vr = {vr[last_live]:.5f} vs -V = {-robot.speed}",
        )
    )
    return results


def _multi_checks(log: TrajectoryLog, params: PFParams) -> list[CheckResult]:
    results: list[CheckResult] = []
    robots = log.scenario.sorted_robots()
    radius = {r.id: r.body_radius for r in robots}
    worst_margin = math.inf
    for (i, j), trace in log.pairs.items():
        margin = min(trace.r) - (radius[i] + radius[j])
        worst_margin = min(worst_margin, margin)
    results.append(
        _check(
            "pairwise_clearance",
            worst_margin > 0.0,
            f"worst min-separation margin over body contact: {worst_margin:.3f} m",
        )
    )

    all_coop = all(r.behavior is BehaviorKind.COOPERATIVE for r in robots)
    if all_coop:
        worst = 0.0
        for k in range(len(log.t)):
            sx = sum(log.robots[rid].rep_fx[k] for rid in log.robot_ids())
            sy = sum(log.robots[rid].rep_fy[k] for rid in log.robot_ids())
            worst = max(worst, abs(sx), abs(sy))
        results.append(
            _check(
                "repulsive_sum_cancels",
                worst < 1e-9,
                f"max |sum of repulsive inputs| = {worst:.3e}",
            )
        )

    mutual_steps = [
        k
        for k in range(len(log.t))
        if all(trace.triggered[k] for trace in log.pairs.values())
    ]
    agree = True
    for k in mutual_steps:
        signs = {
            math.copysign(1.0, log.robots[rid].omega[k])
            for rid in log.robot_ids()
            if abs(log.robots[rid].omega[k]) > 1e-12
        }
        if len(signs) > 1:
            agree = False
            break
    results.append(
        _check(
            "common_rotation_sense",
            agree,
            f"turn-rate signs agree on {len(mutual_steps)} mutually triggered steps",
        )
    )
    return results


def analyze_log(log: TrajectoryLog, regime: RegimeKind, params: PFParams) -> list[CheckResult]:
    """Run every applicable invariant check for the regime against a log."""
    mismatch = regime_mismatch(log, regime)
    if mismatch is not None:
        raise ValueError(f"regime mismatch: {mismatch}")
    results: list[CheckResult] = []
    monotone = all(b > a for a, b in zip(log.t, log.t[1:]))
    results.append(_check("time_monotone", monotone, "recorded times strictly increase"))
    if log.pairs:
        results.append(_circle_constraint_check(log))

    if regime is RegimeKind.ATTRACTIVE_ONLY:
        results.extend(_attractive_only_checks(log))
    elif regime is RegimeKind.COOP_PAIR:
        results.append(_reciprocity_check(log))
        results.append(_instability_certificate(log, params))
        results.append(_no_retrigger_check(log))
        grazing = _grazing_geometry_check(log, params)
        if grazing is not None:
            results.append(grazing)
        report = closed_loop_errors_from_log(log, log.pair_ids()[0], regime, params)
        if report is not None:
            results.append(
                CheckResult(
                    "closed_loop_gap",
                    "INFO",
                    "idealized closed-loop mismatch (constant-speed steering cannot "
                    f"realize tangential force): max rel error {report.max_rel_error:.3f}",
                )
            )
    elif regime is RegimeKind.COOP_VS_NONCOOP:
        noncoop = next(
            r
            for r in log.scenario.sorted_robots()
            if r.behavior in (BehaviorKind.NON_COOPERATIVE, BehaviorKind.STATIONARY)
        )
        if noncoop.behavior is BehaviorKind.NON_COOPERATIVE:
            results.append(_straight_line_check(log, noncoop.id))
        key = log.pair_ids()[0]
        min_r = min(log.pairs[key].r)
        radius = {r.id: r.body_radius for r in log.scenario.robots}
        results.append(_check("separation_positive", min_r > 0.0, f"min separation {min_r:.3f} m"))
        results.append(
            CheckResult(
                "body_margin",
                "INFO",
                f"margin over body contact {min_r - (radius[key[0]] + radius[key[1]]):.3f} m",
            )
        )
    elif regime is RegimeKind.COOP_VS_ATTACKER:
        results.extend(_attacker_checks(log, params))
    elif regime is RegimeKind.NONVORTEX_PAIR:
        results.extend(_nonvortex_checks(log))
    elif regime is RegimeKind.MULTI_ROBOT:
        results.extend(_multi_checks(log, params))
    return results
