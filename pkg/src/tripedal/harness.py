"""Scenario definition, experiment execution, metrics and file formats.

A scenario couples robot parameters with exactly one gait source: an
explicit gait, a canonical validation gait, or closed-loop path
following through a gait map.  Runs produce a fixed-interval trace and
path-following metrics; both round-trip through files so that metrics
can always be recomputed from a stored trace.

File formats (see README for the column/key reference):

* trace: CSV with header
  ``t,x,y,xi,vx,vy,xidot,phi1,phi2,phi3,N1,N2,N3,e,theta_D,theta_PI,zone,alpha``;
  SI units, xi/phi in radians, theta/alpha in degrees; control columns
  are empty for open-loop runs.
* metrics: YAML key/value with delta (m), t_c (s), max_abs_e (m),
  cycles, completed and the per-segment error series.
* scenario: YAML tree mirroring ScenarioConfig.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path as FsPath

import numpy as np
import yaml

from .control import PIController, Path, PathComplete, control_step
from .dynamics import Trace, concat_traces, integrate
from .dynamics import DEFAULT_ATOL, DEFAULT_OUTPUT_INTERVAL, DEFAULT_RTOL
from .gait import GaitMap, canonical_gait, load_gait_map
from .model import GaitParams, RobotParams, RobotState, WindField, from_dict, to_dict

TRACE_COLUMNS = (
    "t", "x", "y", "xi", "vx", "vy", "xidot",
    "phi1", "phi2", "phi3", "N1", "N2", "N3",
    "e", "theta_D", "theta_PI", "zone", "alpha",
)

_CANONICAL_KINDS = (
    "translate_limb_1", "translate_limb_2", "translate_limb_3",
    "rotate_cw", "rotate_ccw",
)


class ConfigInvalid(Exception):
    """Scenario configuration failed validation; the message names the field."""


class NonPhysical(Exception):
    """Calibration measurements imply negative frictional energy loss."""


class PathMismatch(Exception):
    """Two traces under comparison do not share a path definition."""


# --- friction calibration -----------------------------------------------------


@dataclass(frozen=True)
class CalibrationInput:
    """Ramp-slide measurement for estimating the kinetic friction coefficient.

    A mass released from rest on a slope of angle ``slope`` travels
    ``travel`` metres and reaches ``final_speed``.
    """

    mass: float         # kg
    slope: float        # rad
    travel: float       # m
    final_speed: float  # m/s

    def __post_init__(self) -> None:
        if not self.mass > 0.0:
            raise ValueError("non-positive mass")
        if not 0.0 < self.slope < math.pi / 2.0:
            raise ValueError("slope must lie in (0, 90) degrees")
        if not self.travel > 0.0:
            raise ValueError("non-positive travel distance")
        if self.final_speed < 0.0:
            raise ValueError("negative final speed")


def calibrate_friction(measurement: CalibrationInput, gravity: float = 9.81) -> float:
    """Kinetic friction coefficient from a ramp-slide measurement.

    The frictional energy loss is the released potential energy
    m g dx sin(beta) minus the kinetic energy gained; dividing by the
    normal-force work m g dx cos(beta) gives mu.  Raises NonPhysical
    when the mass gained more kinetic energy than potential released.
    """
    m, beta, dx, v = (
        measurement.mass, measurement.slope, measurement.travel, measurement.final_speed
    )
    potential = m * gravity * dx * math.sin(beta)
    loss = potential - 0.5 * m * v * v
    if loss < -1e-12 * potential:
        raise NonPhysical(
            "kinetic energy gain exceeds the released potential energy"
        )
    return max(loss, 0.0) / (dx * m * gravity * math.cos(beta))


# --- scenario configuration ----------------------------------------------------


@dataclass(frozen=True)
class FollowSpec:
    """Closed-loop gait source: a path, a controller and a gait map."""

    path: Path
    controller: PIController = PIController()
    map_file: str | None = None
    heading_bias_deg: float = 0.0  # constant actuation drift, applied after the PI step
    max_cycles: int = 300

    def __post_init__(self) -> None:
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be at least 1")


@dataclass(frozen=True)
class ScenarioConfig:
    """Declarative description of one experiment.

    Exactly one of ``gait``, ``canonical`` or ``follow`` must be set;
    open-loop sources require ``duration``.  ``seed`` is reserved for
    future stochastic extensions; the core is deterministic.
    """

    robot: RobotParams = RobotParams()
    initial_state: RobotState = RobotState()
    gait: GaitParams | None = None
    canonical: str | None = None
    follow: FollowSpec | None = None
    wind: WindField | None = None
    duration: float | None = None
    output_interval: float = DEFAULT_OUTPUT_INTERVAL
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self) -> None:
        sources = [
            s for s in ("gait", "canonical", "follow") if getattr(self, s) is not None
        ]
        if len(sources) != 1:
            raise ConfigInvalid(
                f"exactly one gait source required, got {sources or 'none'}"
            )
        if self.canonical is not None and self.canonical not in _CANONICAL_KINDS:
            raise ConfigInvalid(
                f"canonical: unknown gait {self.canonical!r}; expected one of {_CANONICAL_KINDS}"
            )
        if self.follow is None:
            if self.duration is None or not self.duration > 0.0:
                raise ConfigInvalid("duration: open-loop scenarios need duration > 0")
        elif self.duration is not None:
            raise ConfigInvalid("duration: not used by follow scenarios (set max_cycles)")
        if not self.output_interval > 0.0:
            raise ConfigInvalid("output_interval: must be > 0")

    def without_pi(self) -> "ScenarioConfig":
        """Copy with both controller gains zeroed (feedforward baseline)."""
        if self.follow is None:
            return self
        ctrl = replace(self.follow.controller, kp=0.0, ki=0.0)
        return replace(self, follow=replace(self.follow, controller=ctrl))


def scenario_to_dict(config: ScenarioConfig) -> dict:
    tree: dict = {"name": config.name}
    tree["robot"] = to_dict(config.robot)
    tree["state"] = to_dict(config.initial_state)
    if config.gait is not None:
        tree["gait"] = to_dict(config.gait)
    if config.canonical is not None:
        tree["canonical"] = config.canonical
    if config.follow is not None:
        follow = config.follow
        tree["follow"] = {
            "path": {
                "waypoints": [list(p) for p in follow.path.waypoints],
                "capture_radius": follow.path.capture_radius,
                "closed": follow.path.closed,
            },
            "controller": {
                "kp": follow.controller.kp,
                "ki": follow.controller.ki,
                "ts": follow.controller.ts,
                "windup_limit": follow.controller.windup_limit,
            },
            "map_file": follow.map_file,
            "heading_bias_deg": follow.heading_bias_deg,
            "max_cycles": follow.max_cycles,
        }
    if config.wind is not None:
        tree["wind"] = to_dict(config.wind)
    if config.duration is not None:
        tree["duration"] = config.duration
    tree["output_interval"] = config.output_interval
    tree["rtol"] = config.rtol
    tree["atol"] = config.atol
    tree["seed"] = config.seed
    return tree


def scenario_from_dict(tree: dict) -> ScenarioConfig:
    known = {
        "name", "robot", "state", "gait", "canonical", "follow", "wind",
        "duration", "output_interval", "rtol", "atol", "seed",
    }
    unknown = sorted(set(tree) - known)
    if unknown:
        raise ConfigInvalid(f"{unknown[0]}: unknown scenario key")
    try:
        follow = None
        if "follow" in tree:
            ft = dict(tree["follow"])
            pt = dict(ft.pop("path"))
            path = Path(
                waypoints=tuple(tuple(p) for p in pt.pop("waypoints")),
                **pt,
            )
            ctrl = PIController(**ft.pop("controller", {}))
            follow = FollowSpec(path=path, controller=ctrl, **ft)
        return ScenarioConfig(
            robot=from_dict(RobotParams, tree.get("robot", {})),
            initial_state=from_dict(RobotState, tree.get("state", {})),
            gait=from_dict(GaitParams, tree["gait"]) if "gait" in tree else None,
            canonical=tree.get("canonical"),
            follow=follow,
            wind=from_dict(WindField, tree["wind"]) if "wind" in tree else None,
            duration=tree.get("duration"),
            output_interval=tree.get("output_interval", DEFAULT_OUTPUT_INTERVAL),
            rtol=tree.get("rtol", DEFAULT_RTOL),
            atol=tree.get("atol", DEFAULT_ATOL),
            seed=tree.get("seed", 0),
            name=tree.get("name", "scenario"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(str(exc)) from exc


def load_scenario(path: str | FsPath) -> ScenarioConfig:
    return scenario_from_dict(yaml.safe_load(FsPath(path).read_text()) or {})


def save_scenario(config: ScenarioConfig, path: str | FsPath) -> None:
    FsPath(path).write_text(yaml.safe_dump(scenario_to_dict(config), sort_keys=False))


# --- metrics -------------------------------------------------------------------


@dataclass
class Metrics:
    """Path-following performance of one run.

    ``delta`` is the cumulative |cross-track error| sampled once per
    control cycle (m); ``t_c`` the completion time (s, None while the
    final waypoint is uncaptured); ``per_segment`` maps segment index to
    its error series (m).
    """

    delta: float
    t_c: float | None
    max_abs_e: float
    cycles: int
    completed: bool
    per_segment: dict[int, list[float]] = field(default_factory=dict)


def _metrics_from_cycles(
    errors_m: list[float], segments: list[int], t_c: float | None, completed: bool
) -> Metrics:
    per_segment: dict[int, list[float]] = {}
    for seg, e in zip(segments, errors_m):
        per_segment.setdefault(seg, []).append(e)
    return Metrics(
        delta=float(sum(abs(e) for e in errors_m)),
        t_c=t_c,
        max_abs_e=float(max((abs(e) for e in errors_m), default=0.0)),
        cycles=len(errors_m),
        completed=completed,
        per_segment=per_segment,
    )


def recompute_metrics(trace: Trace) -> Metrics:
    """Rebuild Metrics from a closed-loop trace.

    Uses the per-cycle error samples stored at cycle-start rows and
    replays the waypoint-capture logic over the recorded positions, so a
    stored trace is sufficient to reproduce the run-time metrics.
    """
    if trace.waypoints is None or trace.control_period is None:
        raise ValueError("trace carries no path metadata; load the run directory")
    path = Path(
        waypoints=tuple(tuple(p) for p in trace.waypoints),
        capture_radius=float(trace.capture_radius),
        closed=bool(trace.closed_path),
    )
    dt = trace.t[1] - trace.t[0]
    per = int(round(trace.control_period / dt))
    n_cycles = (len(trace.t) - 1) // per

    errors, segments = [], []
    seg = 0
    completed = False
    t_c = None
    for k in range(n_cycles + 1):
        idx = k * per
        pos = (float(trace.x[idx]), float(trace.y[idx]))
        while math.dist(pos, tuple(path.target(seg))) <= path.capture_radius:
            seg += 1
            if seg >= path.segment_count:
                completed = True
                t_c = float(trace.t[idx])
                break
        if completed or k == n_cycles:
            break
        errors.append(float(trace.e[idx]))
        segments.append(seg)
    return _metrics_from_cycles(errors, segments, t_c, completed)


# --- scenario execution ----------------------------------------------------------


def _run_follow(
    config: ScenarioConfig, gait_map: GaitMap
) -> tuple[Trace, Metrics]:
    follow = config.follow
    state = config.initial_state
    ctrl = follow.controller
    seg = 0
    segments_out: list[Trace] = []
    errors_m: list[float] = []
    seg_indices: list[int] = []
    completed = False
    t_c: float | None = None

    for _ in range(follow.max_cycles):
        try:
            step = control_step(
                state, seg, ctrl, gait_map, follow.path, follow.heading_bias_deg
            )
        except PathComplete:
            completed = True
            t_c = state.time
            break
        ctrl = step.controller
        seg = step.segment_index

        piece = integrate(
            state, step.gait, config.robot, ctrl.ts,
            wind=config.wind, rtol=config.rtol, atol=config.atol,
            output_interval=config.output_interval,
        )
        piece.e[:] = step.e_cm / 100.0
        piece.theta_d[:] = step.theta_d
        piece.theta_pi[:] = step.theta_pi
        piece.zone[:] = step.zone_id
        piece.alpha[:] = step.alpha
        segments_out.append(piece)

        errors_m.append(step.e_cm / 100.0)
        seg_indices.append(seg)
        state = piece.final_state

    if not segments_out:
        raise ConfigInvalid("follow.path: robot starts inside the final capture radius")
    trace = concat_traces(segments_out)
    trace.waypoints = np.array(follow.path.waypoints)
    trace.capture_radius = follow.path.capture_radius
    trace.closed_path = follow.path.closed
    trace.control_period = ctrl.ts
    metrics = _metrics_from_cycles(errors_m, seg_indices, t_c, completed)
    return trace, metrics


def run_scenario(
    config: ScenarioConfig,
    out_dir: str | FsPath | None = None,
    gait_map: GaitMap | None = None,
) -> tuple[Trace, Metrics]:
    """Execute a scenario and optionally persist the run.

    Closed-loop scenarios advance cycle by cycle at the controller
    period; open-loop scenarios integrate the configured gait for
    ``duration``.  When ``out_dir`` is given, trace.csv, metrics.yaml
    and the resolved scenario.yaml are written there.

    The gait map for follow scenarios comes from ``gait_map`` or, if
    absent, from the configured ``map_file``.
    """
    if config.follow is not None:
        if gait_map is None:
            if config.follow.map_file is None:
                raise ConfigInvalid("follow.map_file: closed-loop runs need a gait map")
            gait_map = load_gait_map(config.follow.map_file)
        trace, metrics = _run_follow(config, gait_map)
    else:
        gait = config.gait if config.gait is not None else canonical_gait(config.canonical)
        trace = integrate(
            config.initial_state, gait, config.robot, config.duration,
            wind=config.wind, rtol=config.rtol, atol=config.atol,
            output_interval=config.output_interval,
        )
        metrics = Metrics(
            delta=0.0, t_c=None, max_abs_e=0.0,
            cycles=int(math.floor(config.duration * gait.frequency + 1e-9)),
            completed=False,
        )

    if out_dir is not None:
        write_run(out_dir, trace, metrics, config)
    return trace, metrics


# --- trace and metrics files ------------------------------------------------------


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def write_trace_csv(trace: Trace, path: str | FsPath) -> None:
    """Write a trace as CSV with the canonical column order.

    Floats are written with full round-trip precision; NaN control
    columns become empty cells; zone is an integer.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for i in range(len(trace.t)):
            zone = trace.zone[i]
            writer.writerow(
                [
                    _fmt(trace.t[i]), _fmt(trace.x[i]), _fmt(trace.y[i]),
                    _fmt(trace.xi[i]), _fmt(trace.vx[i]), _fmt(trace.vy[i]),
                    _fmt(trace.xidot[i]),
                    _fmt(trace.phi[i, 0]), _fmt(trace.phi[i, 1]), _fmt(trace.phi[i, 2]),
                    _fmt(trace.normals[i, 0]), _fmt(trace.normals[i, 1]),
                    _fmt(trace.normals[i, 2]),
                    _fmt(trace.e[i]), _fmt(trace.theta_d[i]), _fmt(trace.theta_pi[i]),
                    "" if math.isnan(zone) else str(int(zone)),
                    _fmt(trace.alpha[i]),
                ]
            )


def read_trace_csv(path: str | FsPath) -> Trace:
    """Read a trace written by :func:`write_trace_csv` (no path metadata)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header!r}")
        rows = [[float(cell) if cell else math.nan for cell in row] for row in reader]
    data = np.array(rows)
    return Trace(
        t=data[:, 0], x=data[:, 1], y=data[:, 2], xi=data[:, 3],
        vx=data[:, 4], vy=data[:, 5], xidot=data[:, 6],
        phi=data[:, 7:10], normals=data[:, 10:13],
        e=data[:, 13], theta_d=data[:, 14], theta_pi=data[:, 15],
        zone=data[:, 16], alpha=data[:, 17],
    )


def write_metrics(metrics: Metrics, path: str | FsPath) -> None:
    tree = {
        "delta": metrics.delta,
        "t_c": metrics.t_c,
        "max_abs_e": metrics.max_abs_e,
        "cycles": metrics.cycles,
        "completed": metrics.completed,
        "per_segment": {int(k): [float(e) for e in v] for k, v in metrics.per_segment.items()},
    }
    FsPath(path).write_text(yaml.safe_dump(tree, sort_keys=False))


def read_metrics(path: str | FsPath) -> Metrics:
    tree = yaml.safe_load(FsPath(path).read_text())
    return Metrics(
        delta=float(tree["delta"]),
        t_c=None if tree["t_c"] is None else float(tree["t_c"]),
        max_abs_e=float(tree["max_abs_e"]),
        cycles=int(tree["cycles"]),
        completed=bool(tree["completed"]),
        per_segment={int(k): list(v) for k, v in tree.get("per_segment", {}).items()},
    )


def write_run(
    out_dir: str | FsPath, trace: Trace, metrics: Metrics, config: ScenarioConfig
) -> FsPath:
    """Persist trace.csv, metrics.yaml and scenario.yaml into a run directory."""
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / "trace.csv")
    write_metrics(metrics, out / "metrics.yaml")
    save_scenario(config, out / "scenario.yaml")
    return out


def load_run(run_dir: str | FsPath) -> tuple[Trace, Metrics, ScenarioConfig]:
    """Load a run directory, restoring the trace's path metadata."""
    run = FsPath(run_dir)
    trace = read_trace_csv(run / "trace.csv")
    metrics = read_metrics(run / "metrics.yaml")
    config = load_scenario(run / "scenario.yaml")
    if config.follow is not None:
        trace.waypoints = np.array(config.follow.path.waypoints)
        trace.capture_radius = config.follow.path.capture_radius
        trace.closed_path = config.follow.path.closed
        trace.control_period = config.follow.controller.ts
    return trace, metrics, config


# --- run comparison -----------------------------------------------------------------


@dataclass
class CompareReport:
    """Side-by-side metrics of two runs over the same path."""

    metrics_a: Metrics
    metrics_b: Metrics
    delta_change: float        # delta_b - delta_a, m
    t_c_change: float | None   # s, None unless both runs completed
    segment_stats: dict[int, tuple[float, float]]  # seg -> (mean|e|_a, mean|e|_b)

    def render(self, label_a: str = "run A", label_b: str = "run B") -> str:
        lines = [
            f"{'':<12}{'delta (m)':>12}{'T_c (s)':>10}{'max|e| (m)':>12}{'cycles':>8}",
        ]
        for label, m in ((label_a, self.metrics_a), (label_b, self.metrics_b)):
            t_c = f"{m.t_c:.1f}" if m.t_c is not None else "-"
            lines.append(
                f"{label:<12}{m.delta:>12.4f}{t_c:>10}{m.max_abs_e:>12.4f}{m.cycles:>8d}"
            )
        lines.append(f"delta change: {self.delta_change:+.4f} m")
        if self.t_c_change is not None:
            lines.append(f"T_c change: {self.t_c_change:+.1f} s")
        lines.append(f"{'segment':<12}{'mean|e| A':>12}{'mean|e| B':>12}")
        for seg in sorted(self.segment_stats):
            ma, mb = self.segment_stats[seg]
            lines.append(f"{seg:<12d}{ma:>12.4f}{mb:>12.4f}")
        return "\n".join(lines)


def compare_runs(trace_a: Trace, trace_b: Trace) -> CompareReport:
    """Compare two closed-loop traces that follow the same path.

    Metrics are recomputed from the stored traces.  Raises PathMismatch
    when the traces do not share a path definition.
    """
    for trace in (trace_a, trace_b):
        if trace.waypoints is None:
            raise PathMismatch("trace carries no path definition")
    same = (
        trace_a.waypoints.shape == trace_b.waypoints.shape
        and np.max(np.abs(trace_a.waypoints - trace_b.waypoints)) <= 1e-12
        and trace_a.closed_path == trace_b.closed_path
        and abs(trace_a.capture_radius - trace_b.capture_radius) <= 1e-12
    )
    if not same:
        raise PathMismatch("traces were recorded against different paths")

    metrics_a = recompute_metrics(trace_a)
    metrics_b = recompute_metrics(trace_b)
    stats: dict[int, tuple[float, float]] = {}
    for seg in sorted(set(metrics_a.per_segment) | set(metrics_b.per_segment)):
        ea = metrics_a.per_segment.get(seg, [])
        eb = metrics_b.per_segment.get(seg, [])
        stats[seg] = (
            float(np.mean(np.abs(ea))) if ea else math.nan,
            float(np.mean(np.abs(eb))) if eb else math.nan,
        )
    t_c_change = None
    if metrics_a.t_c is not None and metrics_b.t_c is not None:
        t_c_change = metrics_b.t_c - metrics_a.t_c
    return CompareReport(
        metrics_a=metrics_a,
        metrics_b=metrics_b,
        delta_change=metrics_b.delta - metrics_a.delta,
        t_c_change=t_c_change,
        segment_stats=stats,
    )


def condition_table(cells: dict[tuple[str, str], Metrics]) -> str:
    """Text grid of delta/T_c over control (rows) and flow (columns) conditions.

    ``cells`` maps (row label, column label) to run metrics; the classic
    layout is two control rows against three flow columns.
    """
    rows = list(dict.fromkeys(k[0] for k in cells))
    cols = list(dict.fromkeys(k[1] for k in cells))
    width = 22
    lines = ["".ljust(12) + "".join(c.center(width) for c in cols)]
    for r in rows:
        parts = [r.ljust(12)]
        for c in cols:
            m = cells.get((r, c))
            if m is None:
                parts.append("-".center(width))
            else:
                t_c = f"{m.t_c:.0f}" if m.t_c is not None else "-"
                parts.append(f"delta={m.delta:.3f} T_c={t_c}".center(width))
        lines.append("".join(parts))
    return "\n".join(lines)
