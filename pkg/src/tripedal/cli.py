"""Command-line interface.

Subcommands:

* ``simulate``  open-loop gait run from a scenario config
* ``gaitmap``   build the universal gait map and write it to JSON
* ``follow``    closed-loop path following through a gait map
* ``calibrate`` friction coefficient from a ramp-slide measurement
* ``compare``   side-by-side report of two stored runs
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .gait import build_gait_map, save_gait_map
from .harness import (
    CalibrationInput,
    calibrate_friction,
    compare_runs,
    load_run,
    load_scenario,
    run_scenario,
)
from .model import RobotParams, WindField, from_dict
import yaml


def _parse_wind(spec: str) -> WindField:
    """Parse a --wind 'speed,direction_deg' override."""
    try:
        speed_s, direction_s = spec.split(",")
        return WindField(speed=float(speed_s), direction=math.radians(float(direction_s)))
    except ValueError as exc:
        raise SystemExit(f"--wind expects 'speed,direction_deg', got {spec!r}") from exc


def _apply_overrides(config, args):
    if getattr(args, "wind", None):
        config = replace(config, wind=_parse_wind(args.wind))
    if getattr(args, "no_pi", False) and config.follow is not None:
        config = config.without_pi()
    return config


def _cmd_simulate(args) -> int:
    config = _apply_overrides(load_scenario(args.config), args)
    if config.follow is not None:
        raise SystemExit("simulate runs open-loop scenarios; use `follow` instead")
    out = Path(args.out) if args.out else Path("runs") / config.name
    trace, _ = run_scenario(config, out_dir=out)
    state = trace.final_state
    print(
        f"{config.name}: {trace.t[-1] - trace.t[0]:.2f} s, final position "
        f"({state.x:+.4f}, {state.y:+.4f}) m, heading {math.degrees(state.heading):+.2f} deg"
    )
    print(f"wrote {out / 'trace.csv'}")
    return 0


def _cmd_gaitmap(args) -> int:
    params = RobotParams()
    if args.config:
        tree = yaml.safe_load(Path(args.config).read_text()) or {}
        if "robot" in tree:
            params = from_dict(RobotParams, tree["robot"])
    mu_values = tuple(float(m) for m in args.mu.split(",")) if args.mu else (0.33, 0.59, 0.87)
    alpha_grid = np.arange(0.0, 30.0 + 0.5 * args.alpha_step, args.alpha_step)
    gait_map = build_gait_map(
        params, mu_values=mu_values, alpha_grid=alpha_grid, cycles=args.cycles
    )
    out = Path(args.out) if args.out else Path("gaitmap.json")
    if out.is_dir():
        out = out / "gaitmap.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_gait_map(gait_map, out)
    print(
        f"gait map over mu={list(mu_values)}, alpha 0..30 step {args.alpha_step}: "
        f"theta range ({gait_map.theta_avg[0]:.2f}, {gait_map.theta_avg[-1]:.2f}] deg"
    )
    print(f"wrote {out}")
    return 0


def _cmd_follow(args) -> int:
    config = _apply_overrides(load_scenario(args.config), args)
    if config.follow is None:
        raise SystemExit("follow needs a scenario with a `follow` section")
    if args.map:
        config = replace(config, follow=replace(config.follow, map_file=args.map))
    out = Path(args.out) if args.out else Path("runs") / config.name
    trace, metrics = run_scenario(config, out_dir=out)
    t_c = f"{metrics.t_c:.1f} s" if metrics.t_c is not None else "not completed"
    print(
        f"{config.name}: {metrics.cycles} cycles, delta={metrics.delta:.4f} m, "
        f"max|e|={metrics.max_abs_e:.4f} m, T_c={t_c}"
    )
    print(f"wrote {out / 'trace.csv'}")
    return 0


def _cmd_calibrate(args) -> int:
    if args.config:
        tree = yaml.safe_load(Path(args.config).read_text()) or {}
        measurement = CalibrationInput(
            mass=float(tree["mass"]),
            slope=math.radians(float(tree["slope_deg"])),
            travel=float(tree["travel"]),
            final_speed=float(tree["final_speed"]),
        )
    else:
        missing = [
            name for name in ("mass", "slope_deg", "travel", "speed")
            if getattr(args, name) is None
        ]
        if missing:
            raise SystemExit(f"calibrate needs --config or all of --{', --'.join(missing)}")
        measurement = CalibrationInput(
            mass=args.mass,
            slope=math.radians(args.slope_deg),
            travel=args.travel,
            final_speed=args.speed,
        )
    mu = calibrate_friction(measurement)
    print(f"mu = {mu:.6f}")
    return 0


def _cmd_compare(args) -> int:
    trace_a, _, _ = load_run(args.run_a)
    trace_b, _, _ = load_run(args.run_b)
    report = compare_runs(trace_a, trace_b)
    text = report.render(label_a=Path(args.run_a).name, label_b=Path(args.run_b).name)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.txt").write_text(text + "\n")
        print(f"wrote {out / 'compare.txt'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripedal",
        description="Simulation and control toolkit for a friction-driven tripedal robot",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an open-loop gait scenario")
    p.add_argument("--config", required=True, help="scenario YAML file")
    p.add_argument("--out", help="output directory (default runs/<name>)")
    p.add_argument("--wind", help="override wind as 'speed,direction_deg'")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("gaitmap", help="build and serialize the universal gait map")
    p.add_argument("--config", help="YAML file whose `robot` section overrides defaults")
    p.add_argument("--out", help="output file or directory (default gaitmap.json)")
    p.add_argument("--mu", help="comma-separated friction coefficients")
    p.add_argument("--alpha-step", type=float, default=1.0, help="alpha grid step, deg")
    p.add_argument("--cycles", type=int, default=10, help="cycles per grid point")
    p.set_defaults(func=_cmd_gaitmap)

    p = sub.add_parser("follow", help="run a closed-loop path-following scenario")
    p.add_argument("--config", required=True, help="scenario YAML file")
    p.add_argument("--out", help="output directory (default runs/<name>)")
    p.add_argument("--map", help="gait map JSON (overrides follow.map_file)")
    p.add_argument("--no-pi", action="store_true", help="zero both controller gains")
    p.add_argument("--wind", help="override wind as 'speed,direction_deg'")
    p.set_defaults(func=_cmd_follow)

    p = sub.add_parser("calibrate", help="estimate friction from a ramp slide")
    p.add_argument("--config", help="YAML with mass, slope_deg, travel, final_speed")
    p.add_argument("--mass", type=float, help="sliding mass, kg")
    p.add_argument("--slope-deg", type=float, help="ramp angle, deg")
    p.add_argument("--travel", type=float, help="distance along the ramp, m")
    p.add_argument("--speed", type=float, help="speed after the travel distance, m/s")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("compare", help="compare two stored runs")
    p.add_argument("run_a", help="first run directory")
    p.add_argument("run_b", help="second run directory")
    p.add_argument("--out", help="directory for the written report")
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
