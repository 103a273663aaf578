"""Contact kinematics, ground forces, drag and the planar equations of motion.

The model: three limbs hinged at radius R around the body, limb tips in
point contact with the ground.  Normal forces come from a vertical force
balance plus zero net normal-force torque about the COM; tangential
forces follow a regularized Coulomb law; translation and rotation then
integrate Newton/Euler in the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _core
from .model import ContactSet, GaitParams, RobotParams, RobotState, WindField

#: Condition-number cutoff above which the normal-force system is rejected.
DEGENERACY_COND_LIMIT = 1e12

#: Default integration tolerances and output cadence.
DEFAULT_RTOL = 1e-6
DEFAULT_ATOL = 1e-8
DEFAULT_OUTPUT_INTERVAL = 0.01  # s

_BASE_ANGLES = 2.0 * math.pi / 3.0 * np.arange(3)


class ContactDegenerate(Exception):
    """Contact points are (near-)collinear; the normal-force system is singular."""


class StepFailure(Exception):
    """Adaptive step size underflowed; the input is stiff or degenerate."""


@dataclass(frozen=True)
class NormalForces:
    """Ground normal forces at the three contacts (N).

    Values may come out negative for configurations that would lift a
    limb; they are reported as-is so modeling violations stay visible.
    """

    values: np.ndarray  # (3,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).reshape(3))


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative of the robot state plus the per-contact forces."""

    vx: float
    vy: float
    ax: float
    ay: float
    heading_rate: float
    heading_accel: float
    friction: np.ndarray  # (3, 2) contact friction forces, N
    normals: NormalForces


def contact_kinematics(
    state: RobotState, gait: GaitParams, params: RobotParams, t: float
) -> ContactSet:
    """Positions and velocities of the three contact points at time t.

    Limb i is hinged at angle xi + 2 pi (i-1)/3 from the body centre; the
    tip sits a further ``limb_length`` out at the hinge angle plus the
    limb angle phi_i.  Velocities are the exact time derivatives,
    including the heading-rate and limb-rate terms.
    """
    R = params.hinge_radius
    l = params.limb_length
    phis = np.empty(3)
    phidots = np.empty(3)
    for i in range(3):
        phis[i], phidots[i] = gait.limb_angle(i + 1, t)

    base = state.heading + _BASE_ANGLES
    tip = base + phis
    cb, sb = np.cos(base), np.sin(base)
    ca, sa = np.cos(tip), np.sin(tip)

    positions = np.stack(
        [state.x + R * cb + l * ca, state.y + R * sb + l * sa], axis=1
    )
    velocities = np.stack(
        [
            state.vx - R * state.heading_rate * sb - l * (state.heading_rate + phidots) * sa,
            state.vy + R * state.heading_rate * cb + l * (state.heading_rate + phidots) * ca,
        ],
        axis=1,
    )
    return ContactSet(positions, velocities, phis, phidots)


def solve_normal_forces(
    contacts: ContactSet, com: tuple[float, float], params: RobotParams
) -> NormalForces:
    """Solve the vertical force and torque balance for the normal forces.

    The 3x3 system is [1 1 1; r_x - x; r_y - y] N = [M g; 0; 0]: the
    weight is shared so that the normal forces exert no net torque about
    the COM.  Raises ContactDegenerate when the contact triangle is
    near-collinear (condition number above ``DEGENERACY_COND_LIMIT``).
    """
    dx = contacts.positions[:, 0] - com[0]
    dy = contacts.positions[:, 1] - com[1]
    A = np.vstack([np.ones(3), dx, dy])
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > DEGENERACY_COND_LIMIT:
        raise ContactDegenerate(
            f"contact points near-collinear (condition number {cond:.3e})"
        )
    b = np.array([params.weight, 0.0, 0.0])
    return NormalForces(np.linalg.solve(A, b))


def friction_forces(
    contacts: ContactSet, normals: NormalForces, params: RobotParams
) -> np.ndarray:
    """Regularized Coulomb friction at each contact, shape (3, 2).

    Above the creep threshold the force has magnitude mu*N_i and opposes
    the slip direction; below it the force ramps linearly in velocity,
    which keeps the vector field Lipschitz through slip reversals.
    """
    eps = params.creep_velocity
    speed = np.hypot(contacts.velocities[:, 0], contacts.velocities[:, 1])
    denom = np.maximum(speed, eps)
    scale = -params.friction_mu * normals.values / denom
    return contacts.velocities * scale[:, None]


def drag_force(wind: WindField) -> np.ndarray:
    """Point drag force (fx, fy) of a uniform wind, applied at the COM.

    F_d = 1/2 rho C_d A_d v^2 along the wind direction; no torque.
    """
    magnitude = 0.5 * wind.air_density * wind.drag_coeff * wind.frontal_area * wind.speed**2
    return np.array(
        [magnitude * math.cos(wind.direction), magnitude * math.sin(wind.direction)]
    )


def state_derivative(
    state: RobotState,
    gait: GaitParams,
    params: RobotParams,
    wind: WindField | None = None,
    t: float | None = None,
) -> StateDerivative:
    """Full planar momentum balance at one instant.

    M x-ddot = sum F_i + F_d, J xi-ddot = sum (r_i - x) x F_i (planar
    scalar cross product; drag contributes no torque).
    """
    if t is None:
        t = state.time
    contacts = contact_kinematics(state, gait, params, t)
    normals = solve_normal_forces(contacts, (state.x, state.y), params)
    friction = friction_forces(contacts, normals, params)
    total = friction.sum(axis=0)
    if wind is not None:
        total = total + drag_force(wind)
    rel = contacts.positions - np.array([state.x, state.y])
    torque = float(np.sum(rel[:, 0] * friction[:, 1] - rel[:, 1] * friction[:, 0]))
    return StateDerivative(
        vx=state.vx,
        vy=state.vy,
        ax=float(total[0]) / params.body_mass,
        ay=float(total[1]) / params.body_mass,
        heading_rate=state.heading_rate,
        heading_accel=torque / params.rot_inertia,
        friction=friction,
        normals=normals,
    )


@dataclass
class Trace:
    """Fixed-interval samples of one simulation.

    Column units: t in s; x, y in m; xi in rad (unwrapped); vx, vy in
    m/s; xidot in rad/s; phi in rad; normals in N.  The control columns
    (e in m, theta_d/theta_pi/alpha in deg, zone 1-6) are NaN for
    open-loop runs and constant within each control cycle otherwise.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    xidot: np.ndarray
    phi: np.ndarray      # (n, 3)
    normals: np.ndarray  # (n, 3)
    e: np.ndarray
    theta_d: np.ndarray
    theta_pi: np.ndarray
    zone: np.ndarray
    alpha: np.ndarray
    # path-following metadata, set by the harness for closed-loop runs
    waypoints: np.ndarray | None = None  # (k, 2)
    capture_radius: float | None = None
    closed_path: bool | None = None
    control_period: float | None = None  # s per control cycle

    def __len__(self) -> int:
        return len(self.t)

    def state_at(self, index: int) -> RobotState:
        return RobotState(
            x=float(self.x[index]), y=float(self.y[index]),
            vx=float(self.vx[index]), vy=float(self.vy[index]),
            heading=float(self.xi[index]), heading_rate=float(self.xidot[index]),
            time=float(self.t[index]),
        )

    @property
    def final_state(self) -> RobotState:
        return self.state_at(len(self.t) - 1)


def _decorate(
    t: np.ndarray, states: np.ndarray, gait: GaitParams, params: RobotParams
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized limb angles and normal forces for a batch of samples."""
    w = 2.0 * math.pi * gait.frequency
    amps = gait.amplitudes_rad()
    arg = w * t[:, None] + np.asarray(gait.phases)
    phi = amps * np.sin(arg)

    base = states[:, 4][:, None] + _BASE_ANGLES
    tip = base + phi
    dx = params.hinge_radius * np.cos(base) + params.limb_length * np.cos(tip)
    dy = params.hinge_radius * np.sin(base) + params.limb_length * np.sin(tip)

    # Cramer's rule on [1 1 1; dx; dy] N = [Mg; 0; 0], batched over samples
    det = (
        (dx[:, 1] * dy[:, 2] - dx[:, 2] * dy[:, 1])
        - (dx[:, 0] * dy[:, 2] - dx[:, 2] * dy[:, 0])
        + (dx[:, 0] * dy[:, 1] - dx[:, 1] * dy[:, 0])
    )
    weight = params.weight
    normals = np.stack(
        [
            weight * (dx[:, 1] * dy[:, 2] - dx[:, 2] * dy[:, 1]) / det,
            weight * (dx[:, 2] * dy[:, 0] - dx[:, 0] * dy[:, 2]) / det,
            weight * (dx[:, 0] * dy[:, 1] - dx[:, 1] * dy[:, 0]) / det,
        ],
        axis=1,
    )
    return phi, normals


def integrate(
    state: RobotState,
    gait: GaitParams,
    params: RobotParams,
    duration: float,
    wind: WindField | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    output_interval: float = DEFAULT_OUTPUT_INTERVAL,
) -> Trace:
    """Advance the robot for ``duration`` seconds from ``state``.

    Uses an embedded Runge-Kutta 5(4) pair with adaptive steps and emits
    dense samples every ``output_interval`` seconds (plus the endpoint).
    Limb angles are taken from the gait clock, i.e. phase continues from
    ``state.time``.

    Raises StepFailure when the adaptive step underflows and
    ContactDegenerate when the contact geometry collapses.
    """
    if not duration > 0.0:
        raise ValueError("duration must be positive")
    t0 = state.time
    t_end = t0 + duration

    n_inner = int(math.floor(duration / output_interval + 1e-9))
    t_out = t0 + output_interval * np.arange(n_inner + 1)
    if t_end - t_out[-1] > 1e-9 * max(1.0, abs(t_end)):
        t_out = np.append(t_out, t_end)
    else:
        t_out[-1] = t_end

    wind_force = drag_force(wind) if wind is not None else np.zeros(2)
    p = _core.pack_params(params, gait, wind_force)
    y_out = np.empty((len(t_out), 6))
    status, _, _ = _core._integrate_core(
        state.as_array(), t0, t_end, p, rtol, atol, t_out, y_out
    )
    if status == _core.STEP_UNDERFLOW:
        raise StepFailure(f"step size underflowed below {_core.MIN_STEP:g} s")
    if status == _core.DEGENERATE_CONTACTS:
        raise ContactDegenerate("contact points collapsed during integration")

    phi, normals = _decorate(t_out, y_out, gait, params)
    n = len(t_out)
    nan = np.full(n, np.nan)
    return Trace(
        t=t_out,
        x=y_out[:, 0], y=y_out[:, 1], xi=y_out[:, 4],
        vx=y_out[:, 2], vy=y_out[:, 3], xidot=y_out[:, 5],
        phi=phi, normals=normals,
        e=nan.copy(), theta_d=nan.copy(), theta_pi=nan.copy(),
        zone=nan.copy(), alpha=nan.copy(),
    )


def concat_traces(segments: list[Trace]) -> Trace:
    """Stitch consecutive trace segments into one trace.

    The shared boundary sample between two segments is kept from the
    *later* segment, so in closed-loop traces the row at each cycle
    start carries that cycle's control diagnostics.
    """
    if not segments:
        raise ValueError("no trace segments to concatenate")

    def _cat(name: str) -> np.ndarray:
        arrays = [getattr(seg, name)[:-1] for seg in segments[:-1]]
        arrays.append(getattr(segments[-1], name))
        return np.concatenate(arrays)

    return Trace(
        t=_cat("t"), x=_cat("x"), y=_cat("y"), xi=_cat("xi"),
        vx=_cat("vx"), vy=_cat("vy"), xidot=_cat("xidot"),
        phi=_cat("phi"), normals=_cat("normals"),
        e=_cat("e"), theta_d=_cat("theta_d"), theta_pi=_cat("theta_pi"),
        zone=_cat("zone"), alpha=_cat("alpha"),
    )
