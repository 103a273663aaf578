"""Shared domain types, unit conventions and validation.

Unit conventions used throughout the package:

* lengths/positions in metres, masses in kg, forces in newtons, time in
  seconds;
* gait amplitudes and every heading that crosses a public interface are
  in degrees; all angles are converted to radians once, at the boundary,
  and kept in radians internally (robot heading ``xi``, limb angles
  ``phi``, gait phases ``psi``);
* headings are measured counterclockwise; the body frame has zero along
  the limb-1 hinge axis.

All types are immutable value objects and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
import yaml

DEG_PER_RAD = 180.0 / math.pi
RAD_PER_DEG = math.pi / 180.0

#: Physical servo limit on sinusoid amplitudes (degrees).
AMPLITUDE_LIMIT_DEG = 30.0


def deg_to_rad(angle_deg: float) -> float:
    return angle_deg * RAD_PER_DEG


def rad_to_deg(angle_rad: float) -> float:
    return angle_rad * DEG_PER_RAD


def wrap_deg(angle_deg: float) -> float:
    """Wrap an angle in degrees into the half-open interval (0, 360]."""
    wrapped = math.fmod(angle_deg, 360.0)
    if wrapped <= 0.0:
        wrapped += 360.0
    return wrapped


def wrap_signed_deg(angle_deg: float) -> float:
    """Wrap an angle in degrees into (-180, 180]."""
    wrapped = math.fmod(angle_deg, 360.0)
    if wrapped > 180.0:
        wrapped -= 360.0
    elif wrapped <= -180.0:
        wrapped += 360.0
    return wrapped


@dataclass(frozen=True)
class RobotParams:
    """Geometric, inertial and friction constants of robot and ground.

    Defaults correspond to the physical desk-scale robot: an 0.888 kg
    body with three limbs of length 0.075 m hinged at radius 0.05 m.
    ``rot_inertia`` defaults to the ring estimate M*R^2: the central
    structure carries its mass mostly at the hinge radius where the
    servos mount.  Override it from config if a measured value exists.
    """

    body_mass: float = 0.888          # M, kg
    rot_inertia: float = 0.00222      # J, kg m^2 (ring estimate M*R^2)
    hinge_radius: float = 0.05        # R, m
    limb_length: float = 0.075        # l, m
    friction_mu: float = 0.85         # kinetic friction coefficient
    gravity: float = 9.81             # g, m/s^2
    creep_velocity: float = 1e-4      # slip-speed threshold of the friction regularization, m/s

    def __post_init__(self) -> None:
        validate_params(self)

    @property
    def weight(self) -> float:
        """Total gravitational load M*g carried by the three contacts (N)."""
        return self.body_mass * self.gravity

    def with_mu(self, mu: float) -> "RobotParams":
        return replace(self, friction_mu=mu)


def validate_params(params: RobotParams) -> RobotParams:
    """Return ``params`` unchanged if every invariant holds.

    Raises ValueError naming the first violated invariant.
    """
    if not params.body_mass > 0.0:
        raise ValueError("non-positive mass")
    if not params.rot_inertia > 0.0:
        raise ValueError("non-positive rotational inertia")
    if not params.hinge_radius > 0.0:
        raise ValueError("non-positive hinge radius")
    if not params.limb_length > 0.0:
        raise ValueError("non-positive limb length")
    if params.friction_mu < 0.0:
        raise ValueError("negative friction coefficient")
    if not params.gravity > 0.0:
        raise ValueError("non-positive gravity")
    if not params.creep_velocity > 0.0:
        raise ValueError("non-positive creep velocity")
    return params


@dataclass(frozen=True)
class RobotState:
    """Planar pose and velocity of the central body at one instant.

    ``heading`` is stored unwrapped (no modular reduction) so that net
    rotation over a run stays measurable.
    """

    x: float = 0.0             # m
    y: float = 0.0             # m
    vx: float = 0.0            # m/s
    vy: float = 0.0            # m/s
    heading: float = 0.0       # xi, rad, unwrapped
    heading_rate: float = 0.0  # xi-dot, rad/s
    time: float = 0.0          # s

    def __post_init__(self) -> None:
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ValueError(f"non-finite state component {f.name!r}")

    def as_array(self) -> np.ndarray:
        """State vector [x, y, vx, vy, xi, xi_dot] used by the integrator."""
        return np.array(
            [self.x, self.y, self.vx, self.vy, self.heading, self.heading_rate]
        )

    @classmethod
    def from_array(cls, y: np.ndarray, time: float) -> "RobotState":
        return cls(
            x=float(y[0]), y=float(y[1]), vx=float(y[2]), vy=float(y[3]),
            heading=float(y[4]), heading_rate=float(y[5]), time=float(time),
        )


@dataclass(frozen=True)
class GaitParams:
    """Per-limb sinusoid parameters shared by all gait generators.

    Limb angles follow ``phi_i(t) = a_i * sin(2*pi*f*t + psi_i)`` with
    amplitudes ``a_i`` in degrees and phases ``psi_i`` in radians.
    """

    amplitudes: tuple[float, float, float] = (0.0, 0.0, 0.0)  # deg
    phases: tuple[float, float, float] = (0.0, 0.0, 0.0)      # rad
    frequency: float = 1.0                                    # Hz

    def __post_init__(self) -> None:
        object.__setattr__(self, "amplitudes", tuple(float(a) for a in self.amplitudes))
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        if len(self.amplitudes) != 3 or len(self.phases) != 3:
            raise ValueError("amplitudes and phases must have three entries")
        for a in self.amplitudes:
            if abs(a) > AMPLITUDE_LIMIT_DEG + 1e-12:
                raise ValueError(f"amplitude {a} deg exceeds the ±{AMPLITUDE_LIMIT_DEG} deg servo limit")
        if not self.frequency > 0.0:
            raise ValueError("non-positive gait frequency")

    @property
    def period(self) -> float:
        """Duration of one actuation cycle (s)."""
        return 1.0 / self.frequency

    def amplitudes_rad(self) -> np.ndarray:
        return np.array([deg_to_rad(a) for a in self.amplitudes])

    def limb_angle(self, i: int, t: float) -> tuple[float, float]:
        """Angle and rate (rad, rad/s) of limb ``i`` in {1, 2, 3} at time t."""
        if i not in (1, 2, 3):
            raise ValueError("limb index must be 1, 2 or 3")
        a = deg_to_rad(self.amplitudes[i - 1])
        w = 2.0 * math.pi * self.frequency
        arg = w * t + self.phases[i - 1]
        return a * math.sin(arg), a * w * math.cos(arg)


@dataclass(frozen=True)
class ContactSet:
    """Contact positions/velocities and limb angles for the three limbs."""

    positions: np.ndarray    # (3, 2) contact points r_i, m
    velocities: np.ndarray   # (3, 2) contact-point velocities, m/s
    limb_angles: np.ndarray  # (3,) phi_i, rad
    limb_rates: np.ndarray   # (3,) phi_i-dot, rad/s

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float).reshape(3, 2))
        object.__setattr__(self, "velocities", np.asarray(self.velocities, dtype=float).reshape(3, 2))
        object.__setattr__(self, "limb_angles", np.asarray(self.limb_angles, dtype=float).reshape(3))
        object.__setattr__(self, "limb_rates", np.asarray(self.limb_rates, dtype=float).reshape(3))


@dataclass(frozen=True)
class WindField:
    """Uniform, constant wind acting on the robot as a point drag force."""

    speed: float = 5.5         # v, m/s
    direction: float = 0.0     # world-frame direction the wind blows toward, rad
    air_density: float = 1.204  # rho, kg/m^3 (air at 20 C)
    drag_coeff: float = 1.0    # C_d, bluff-body estimate
    frontal_area: float = 0.02  # A_d, m^2

    def __post_init__(self) -> None:
        if self.speed < 0.0:
            raise ValueError("negative wind speed")
        if not self.air_density > 0.0:
            raise ValueError("non-positive air density")
        if self.drag_coeff < 0.0:
            raise ValueError("negative drag coefficient")
        if self.frontal_area < 0.0:
            raise ValueError("negative frontal area")


# --- config file round-trip ------------------------------------------------
#
# Human-readable key/value config trees.  Every key matches the dataclass
# field name and carries the field's storage unit (amplitudes in degrees,
# phases and wind direction in radians).

_CONFIG_TYPES = {
    "robot": RobotParams,
    "gait": GaitParams,
    "wind": WindField,
    "state": RobotState,
}


def to_dict(obj) -> dict:
    """Plain key/value mapping of a domain type, suitable for YAML."""
    out = {}
    for f in fields(obj):
        value = getattr(obj, f.name)
        if isinstance(value, tuple):
            value = list(value)
        out[f.name] = value
    return out


def from_dict(cls, data: dict):
    """Build a domain type from a mapping, rejecting unknown keys."""
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown {cls.__name__} field: {unknown[0]}")
    kwargs = {}
    for key, value in data.items():
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return cls(**kwargs)


def save_config(path: str | Path, **sections) -> None:
    """Write named domain objects (robot=, gait=, wind=, state=) to YAML."""
    tree = {}
    for name, obj in sections.items():
        if name not in _CONFIG_TYPES:
            raise ValueError(f"unknown config section {name!r}")
        tree[name] = to_dict(obj)
    Path(path).write_text(yaml.safe_dump(tree, sort_keys=False))


def load_config(path: str | Path) -> dict:
    """Read a YAML config tree back into domain objects keyed by section."""
    tree = yaml.safe_load(Path(path).read_text()) or {}
    out = {}
    for name, data in tree.items():
        if name not in _CONFIG_TYPES:
            raise ValueError(f"unknown config section {name!r}")
        out[name] = from_dict(_CONFIG_TYPES[name], data)
    return out
