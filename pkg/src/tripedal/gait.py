"""Limb actuation signals, the six-zone omnidirectional gait and the gait map.

The omnidirectional gait splits the desired body-frame translation angle
into six 60-degree zones.  In each zone two limbs run anti-phase at the
full 30-degree amplitude while the remaining "lead" limb oscillates with
amplitude alpha; the realized translation angle varies monotonically
with alpha.  A gait map built from open-loop sweeps inverts that
relation so a desired angle selects alpha directly.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import Trace, integrate
from .model import (
    AMPLITUDE_LIMIT_DEG,
    GaitParams,
    RobotParams,
    RobotState,
    rad_to_deg,
    wrap_deg,
    wrap_signed_deg,
)

GAIT_MAP_FORMAT_VERSION = 1

#: Friction coefficients averaged into the universal map.
DEFAULT_MAP_MU = (0.33, 0.59, 0.87)
DEFAULT_MAP_CYCLES = 10
#: Cycles skipped before averaging; the first two carry the start-up transient.
TRANSIENT_CYCLES = 2


class MapNotMonotone(Exception):
    """Realized translation angle failed to increase strictly with alpha."""


class MapOrientationError(Exception):
    """Realized headings landed outside zone 1; a sign convention is off."""


def limb_angle(gait: GaitParams, i: int, t: float) -> tuple[float, float]:
    """Angle and rate (rad, rad/s) of limb ``i`` in {1, 2, 3} at time t.

    phi_i = a_i sin(2 pi f t + psi_i) with the amplitude converted from
    degrees; the rate is the exact derivative.
    """
    return gait.limb_angle(i, t)


# --- canonical validation gaits ---------------------------------------------

_ROTATE_PHASES_CW = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)
_ROTATE_PHASES_CCW = (0.0, 4.0 * math.pi / 3.0, 2.0 * math.pi / 3.0)

_CANONICAL_AMPLITUDES = {
    "translate_limb_1": (0.0, 30.0, -30.0),
    "translate_limb_2": (-30.0, 0.0, 30.0),
    "translate_limb_3": (30.0, -30.0, 0.0),
}


def canonical_gait(kind: str, frequency: float = 1.0) -> GaitParams:
    """One of the validation gaits.

    ``translate_limb_k``: limb k idle, the other two anti-phase at full
    amplitude; the robot translates along the limb-k hinge axis.
    ``rotate_cw`` / ``rotate_ccw``: all limbs at full amplitude with
    phases 120 degrees apart; the phase ordering sets the turn direction
    (fixed by simulation: ascending phases turn clockwise).
    """
    if kind in _CANONICAL_AMPLITUDES:
        return GaitParams(amplitudes=_CANONICAL_AMPLITUDES[kind], frequency=frequency)
    if kind == "rotate_cw":
        return GaitParams(
            amplitudes=(30.0, 30.0, 30.0), phases=_ROTATE_PHASES_CW, frequency=frequency
        )
    if kind == "rotate_ccw":
        return GaitParams(
            amplitudes=(30.0, 30.0, 30.0), phases=_ROTATE_PHASES_CCW, frequency=frequency
        )
    raise ValueError(
        f"unknown canonical gait {kind!r}; expected translate_limb_1/2/3, rotate_cw or rotate_ccw"
    )


# --- zone table --------------------------------------------------------------


@dataclass(frozen=True)
class Zone:
    """One 60-degree sector of desired heading and its amplitude template.

    ``amplitudes(alpha) = base + alpha_coef * alpha``; ``reversed_local``
    marks the mirror-image zones whose in-zone angle runs from the upper
    boundary downwards.
    """

    zone_id: int
    lower: float  # deg, exclusive
    upper: float  # deg, inclusive
    base: tuple[float, float, float]
    alpha_coef: tuple[float, float, float]
    reversed_local: bool

    def amplitudes(self, alpha: float) -> tuple[float, float, float]:
        return (
            self.base[0] + self.alpha_coef[0] * alpha,
            self.base[1] + self.alpha_coef[1] * alpha,
            self.base[2] + self.alpha_coef[2] * alpha,
        )

    def local_angle(self, theta_deg: float) -> float:
        """Map a heading inside the zone to the lookup angle in [0, 60]."""
        if self.reversed_local:
            return self.upper - theta_deg
        return theta_deg - self.lower


ZONES: tuple[Zone, ...] = (
    Zone(1, 0.0, 60.0, (0.0, 30.0, -30.0), (1.0, 0.0, 0.0), False),
    Zone(2, 60.0, 120.0, (-30.0, 0.0, 30.0), (0.0, -1.0, 0.0), True),
    Zone(3, 120.0, 180.0, (-30.0, 0.0, 30.0), (0.0, 1.0, 0.0), False),
    Zone(4, 180.0, 240.0, (30.0, -30.0, 0.0), (0.0, 0.0, -1.0), True),
    Zone(5, 240.0, 300.0, (30.0, -30.0, 0.0), (0.0, 0.0, 1.0), False),
    Zone(6, 300.0, 360.0, (0.0, 30.0, -30.0), (-1.0, 0.0, 0.0), True),
)


def zone_select(theta_deg: float) -> Zone:
    """Zone owning a desired heading, after wrapping it into (0, 360].

    Each boundary belongs to the lower zone (0 < theta <= 60 is zone 1).
    """
    if not math.isfinite(theta_deg):
        raise ValueError("heading must be finite")
    theta = wrap_deg(theta_deg)
    index = int(math.ceil(theta / 60.0)) - 1
    zone = ZONES[min(max(index, 0), 5)]
    if not (zone.lower < theta <= zone.upper):  # guard the ceil around round-off
        zone = ZONES[index + 1] if theta > zone.upper else ZONES[index - 1]
    return zone


# --- gait map ----------------------------------------------------------------


@dataclass(frozen=True)
class GaitMap:
    """Sampled alpha-to-angle relation per friction coefficient plus the average.

    ``theta_by_mu[k, j]`` is the mean realized body-frame translation
    angle (deg) of the zone-1 gait with ``alpha_deg[j]`` under
    ``mu_values[k]``; ``theta_avg`` is the friction-averaged curve used
    as the universal map.
    """

    mu_values: tuple[float, ...]
    alpha_deg: np.ndarray    # (m,)
    theta_by_mu: np.ndarray  # (k, m)
    theta_avg: np.ndarray    # (m,)
    version: int = GAIT_MAP_FORMAT_VERSION

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha_deg", np.asarray(self.alpha_deg, dtype=float))
        object.__setattr__(self, "theta_by_mu", np.asarray(self.theta_by_mu, dtype=float))
        object.__setattr__(self, "theta_avg", np.asarray(self.theta_avg, dtype=float))

    def lookup(self, theta_zone_deg: float) -> float:
        return map_lookup(self, theta_zone_deg)

    def lookup_flagged(self, theta_zone_deg: float) -> tuple[float, bool]:
        """Alpha for an in-zone angle plus a flag for out-of-range clamping."""
        clamped = (
            theta_zone_deg < self.theta_avg[0] or theta_zone_deg > self.theta_avg[-1]
        )
        alpha = float(np.interp(theta_zone_deg, self.theta_avg, self.alpha_deg))
        return alpha, bool(clamped)


def cycle_headings(trace: Trace, period: float) -> np.ndarray:
    """Per-cycle COM displacement angles in the body frame at cycle start.

    Returns degrees wrapped to (-180, 180], one value per whole period
    contained in the trace.
    """
    t = trace.t
    dt = t[1] - t[0]
    per = int(round(period / dt))
    if abs(per * dt - period) > 1e-9:
        raise ValueError("trace sampling does not divide the cycle period")
    n_cycles = int(math.floor((t[-1] - t[0]) / period + 1e-9))
    out = np.empty(n_cycles)
    for c in range(n_cycles):
        i0, i1 = c * per, (c + 1) * per
        dx = trace.x[i1] - trace.x[i0]
        dy = trace.y[i1] - trace.y[i0]
        heading = math.degrees(math.atan2(dy, dx)) - rad_to_deg(trace.xi[i0])
        out[c] = wrap_signed_deg(heading)
    return out


def _sweep_point(
    params: RobotParams, mu: float, alpha: float, cycles: int, frequency: float
) -> float:
    """Mean realized angle of the zone-1 gait for one (mu, alpha) point."""
    gait = GaitParams(amplitudes=(alpha, 30.0, -30.0), frequency=frequency)
    trace = integrate(
        RobotState(), gait, params.with_mu(mu), cycles / frequency
    )
    headings = cycle_headings(trace, 1.0 / frequency)
    return float(np.mean(headings[TRANSIENT_CYCLES:]))


def build_gait_map(
    params: RobotParams | None = None,
    mu_values: tuple[float, ...] = DEFAULT_MAP_MU,
    alpha_grid: np.ndarray | None = None,
    cycles: int = DEFAULT_MAP_CYCLES,
    frequency: float = 1.0,
    max_workers: int | None = None,
) -> GaitMap:
    """Sweep the lead-limb amplitude and build the universal gait map.

    For every (mu, alpha) grid point the zone-1 gait [alpha, 30, -30] is
    simulated from rest; per-cycle translation angles are measured in the
    body frame at each cycle start, the first ``TRANSIENT_CYCLES`` cycles
    are discarded and the rest averaged.  Grid points are independent
    simulations and run on a small thread pool; results are merged in
    grid order, so the map does not depend on scheduling.

    Raises MapNotMonotone when any per-mu curve fails to increase
    strictly with alpha, and MapOrientationError when the realized
    headings do not land in zone 1 (which would mean a sign convention
    is broken).
    """
    if params is None:
        params = RobotParams()
    if alpha_grid is None:
        alpha_grid = np.arange(0.0, 31.0, 1.0)
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    if alpha_grid.ndim != 1 or len(alpha_grid) < 2:
        raise ValueError("alpha grid must hold at least two samples")
    if np.any(alpha_grid < 0.0) or np.any(alpha_grid > AMPLITUDE_LIMIT_DEG):
        raise ValueError(f"alpha grid must stay within [0, {AMPLITUDE_LIMIT_DEG}] deg")
    if np.any(np.diff(alpha_grid) <= 0.0):
        raise ValueError("alpha grid must be strictly increasing")
    if cycles < 4:
        raise ValueError("need at least four cycles to average past the transient")

    jobs = [(mu, alpha) for mu in mu_values for alpha in alpha_grid]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(
            pool.map(
                lambda job: _sweep_point(params, job[0], job[1], cycles, frequency),
                jobs,
            )
        )
    theta_by_mu = np.array(results).reshape(len(mu_values), len(alpha_grid))

    for k, mu in enumerate(mu_values):
        curve = theta_by_mu[k]
        if np.any(np.diff(curve) <= 0.0):
            j = int(np.argmin(np.diff(curve)))
            raise MapNotMonotone(
                f"theta_avg not strictly increasing for mu={mu} near "
                f"alpha={alpha_grid[j]:.1f} deg"
            )
        if not (0.0 < curve[-1] <= 60.0):
            raise MapOrientationError(
                f"theta_avg({alpha_grid[-1]:.0f} deg)={curve[-1]:.2f} deg for mu={mu} "
                "is outside zone 1"
            )
        if not (-5.0 < curve[0] <= 60.0):
            raise MapOrientationError(
                f"theta_avg(0)={curve[0]:.2f} deg for mu={mu} is far from the "
                "limb-1 axis"
            )

    theta_avg = theta_by_mu.mean(axis=0)
    return GaitMap(
        mu_values=tuple(float(m) for m in mu_values),
        alpha_deg=alpha_grid,
        theta_by_mu=theta_by_mu,
        theta_avg=theta_avg,
    )


def map_lookup(gait_map: GaitMap, theta_zone_deg: float) -> float:
    """Lead-limb amplitude for an in-zone angle in (0, 60], degrees.

    Piecewise-linear inverse interpolation of the averaged map; angles
    outside the sampled range clamp to the end amplitudes (use
    ``GaitMap.lookup_flagged`` to observe the clamp).
    """
    return float(np.interp(theta_zone_deg, gait_map.theta_avg, gait_map.alpha_deg))


def gait_for_heading(
    gait_map: GaitMap, theta_body_deg: float, frequency: float = 1.0
) -> GaitParams:
    """Gait realizing a desired body-frame translation heading (degrees).

    Wraps the heading into (0, 360], picks the zone, converts to the
    zone-local angle, looks up alpha and instantiates the zone template
    with zero phases.
    """
    zone = zone_select(theta_body_deg)
    local = zone.local_angle(wrap_deg(theta_body_deg))
    alpha = map_lookup(gait_map, local)
    return GaitParams(amplitudes=zone.amplitudes(alpha), frequency=frequency)


# --- serialization -----------------------------------------------------------


def save_gait_map(gait_map: GaitMap, path: str | Path) -> None:
    """Write a gait map to a versioned JSON file."""
    payload = {
        "version": gait_map.version,
        "mu_values": list(gait_map.mu_values),
        "alpha_deg": gait_map.alpha_deg.tolist(),
        "theta_avg_by_mu": gait_map.theta_by_mu.tolist(),
        "theta_avg_deg": gait_map.theta_avg.tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def load_gait_map(path: str | Path) -> GaitMap:
    """Read a gait map written by :func:`save_gait_map`."""
    payload = json.loads(Path(path).read_text())
    version = payload.get("version")
    if version != GAIT_MAP_FORMAT_VERSION:
        raise ValueError(f"unsupported gait map version {version!r}")
    gait_map = GaitMap(
        mu_values=tuple(payload["mu_values"]),
        alpha_deg=np.array(payload["alpha_deg"], dtype=float),
        theta_by_mu=np.array(payload["theta_avg_by_mu"], dtype=float),
        theta_avg=np.array(payload["theta_avg_deg"], dtype=float),
    )
    if np.any(np.diff(gait_map.theta_avg) <= 0.0):
        raise MapNotMonotone("loaded gait map is not strictly monotone")
    return gait_map
