"""Per-cycle feedback: desired heading, signed path error, PI correction.

The loop runs once per gait cycle.  A waypoint within the capture radius
advances the segment (resetting the integral); the desired heading aims
at the segment end, a discrete PI term built from the signed cross-track
error shifts that heading, and the gait map turns the corrected heading
into limb amplitudes that are held for the whole cycle.

Sign conventions, fixed by the closed-loop convergence tests: headings
are counterclockwise-positive, the cross-track error is positive to the
left of the directed segment, and a positive error rotates the command
clockwise (toward the path).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .gait import GaitMap, gait_for_heading, zone_select
from .model import GaitParams, RobotState, rad_to_deg, wrap_deg


class TargetCoincident(Exception):
    """Target point coincides with the robot position; no heading exists."""


class DegenerateSegment(Exception):
    """Path segment endpoints coincide; no cross-track direction exists."""


class PathComplete(Exception):
    """The final waypoint has been captured."""


@dataclass(frozen=True)
class Path:
    """Waypoint sequence to follow.

    The robot is assumed to start near ``waypoints[0]``; targets are the
    following waypoints in order.  A closed path appends the first
    waypoint as the final target, completing one lap.
    """

    waypoints: tuple[tuple[float, float], ...]
    capture_radius: float = 0.02  # m
    closed: bool = False

    def __post_init__(self) -> None:
        wps = tuple((float(p[0]), float(p[1])) for p in self.waypoints)
        object.__setattr__(self, "waypoints", wps)
        if len(wps) < 2:
            raise ValueError("a path needs at least two waypoints")
        if not self.capture_radius > 0.0:
            raise ValueError("non-positive capture radius")

    @property
    def segment_count(self) -> int:
        return len(self.waypoints) if self.closed else len(self.waypoints) - 1

    def segment(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        """Start and end point of segment ``index``."""
        if not 0 <= index < self.segment_count:
            raise IndexError(f"segment index {index} out of range")
        a = np.array(self.waypoints[index])
        b = np.array(self.waypoints[(index + 1) % len(self.waypoints)])
        return a, b

    def target(self, index: int) -> np.ndarray:
        return self.segment(index)[1]


@dataclass(frozen=True)
class PIController:
    """Discrete PI correction of the desired translation angle.

    Gains are in degrees of heading per centimetre of cross-track error;
    the integral accumulates e*ts each cycle and its gain-scaled
    contribution is clamped to ``windup_limit`` so integral action can
    never push the command more than one zone away on its own.
    """

    kp: float = 15.0           # deg/cm
    ki: float = 1.0            # deg/cm
    ts: float = 1.0            # s, one gait cycle
    windup_limit: float = 60.0  # deg
    integral: float = 0.0      # cm*s

    def __post_init__(self) -> None:
        if not self.ts > 0.0:
            raise ValueError("non-positive controller period")
        if self.windup_limit < 0.0:
            raise ValueError("negative windup limit")

    def reset(self) -> "PIController":
        return replace(self, integral=0.0)


def desired_heading(state: RobotState, target: tuple[float, float]) -> float:
    """Body-frame heading from the robot to a target point, deg in (0, 360]."""
    dx = target[0] - state.x
    dy = target[1] - state.y
    if math.hypot(dx, dy) < 1e-9:
        raise TargetCoincident("target coincides with the robot position")
    theta_world = math.degrees(math.atan2(dy, dx))
    return wrap_deg(theta_world - rad_to_deg(state.heading))


def path_error(path: Path, segment_index: int, position: tuple[float, float]) -> float:
    """Signed cross-track error in centimetres.

    Perpendicular distance from ``position`` to the infinite line through
    the segment endpoints; positive when the robot is to the left of the
    directed segment.
    """
    a, b = path.segment(segment_index)
    d = b - a
    length = math.hypot(d[0], d[1])
    if length < 1e-12:
        raise DegenerateSegment(f"segment {segment_index} endpoints coincide")
    r = np.asarray(position, dtype=float) - a
    cross = d[0] * r[1] - d[1] * r[0]
    return 100.0 * cross / length


def pi_update(
    ctrl: PIController, e_cm: float, theta_d_deg: float
) -> tuple[float, PIController]:
    """One discrete PI step: corrected heading (deg) and updated controller.

    The integral accumulates first, its contribution is clamped, and the
    correction is applied clockwise for positive (left-of-path) error.
    """
    integral = ctrl.integral + e_cm * ctrl.ts
    if ctrl.ki > 0.0:
        bound = ctrl.windup_limit / ctrl.ki
        integral = min(max(integral, -bound), bound)
    correction = ctrl.kp * e_cm + ctrl.ki * integral
    theta_pi = wrap_deg(theta_d_deg - correction)
    return theta_pi, replace(ctrl, integral=integral)


@dataclass(frozen=True)
class ControlStep:
    """Outcome of one control cycle: the selected gait plus diagnostics."""

    gait: GaitParams
    controller: PIController
    segment_index: int
    e_cm: float
    theta_d: float   # deg
    theta_pi: float  # deg
    zone_id: int
    alpha: float     # deg
    advanced: bool   # waypoint captured on this cycle


def control_step(
    state: RobotState,
    segment_index: int,
    ctrl: PIController,
    gait_map: GaitMap,
    path: Path,
    heading_bias_deg: float = 0.0,
) -> ControlStep:
    """Run the once-per-cycle feedback pipeline.

    Advances the segment while the current target is within the capture
    radius (resetting the integral on each advance; PathComplete is
    raised once the final waypoint is captured), then computes the
    desired heading toward the segment end, the signed cross-track
    error, the PI-corrected heading and the gait for it.

    ``heading_bias_deg`` rotates the executed heading after the
    controller, emulating actuation drift the feedback cannot see
    directly; diagnostics record the executed zone and alpha.
    """
    advanced = False
    position = (state.x, state.y)
    while math.dist(position, tuple(path.target(segment_index))) <= path.capture_radius:
        segment_index += 1
        advanced = True
        ctrl = ctrl.reset()
        if segment_index >= path.segment_count:
            raise PathComplete("final waypoint captured")

    target = path.target(segment_index)
    theta_d = desired_heading(state, (target[0], target[1]))
    e_cm = path_error(path, segment_index, position)
    theta_pi, ctrl = pi_update(ctrl, e_cm, theta_d)

    executed = wrap_deg(theta_pi + heading_bias_deg)
    zone = zone_select(executed)
    alpha = gait_map.lookup(zone.local_angle(wrap_deg(executed)))
    gait = gait_for_heading(gait_map, executed, frequency=1.0 / ctrl.ts)

    return ControlStep(
        gait=gait,
        controller=ctrl,
        segment_index=segment_index,
        e_cm=e_cm,
        theta_d=theta_d,
        theta_pi=theta_pi,
        zone_id=zone.zone_id,
        alpha=alpha,
        advanced=advanced,
    )
