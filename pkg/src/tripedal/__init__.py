"""Simulation and control toolkit for a friction-driven tripedal robot.

Planar rigid-body dynamics with regularized Coulomb contact friction,
six-zone omnidirectional gait synthesis through a simulated gait map,
and discrete PI path following with disturbance rejection.
"""

from .control import (
    ControlStep,
    DegenerateSegment,
    Path,
    PathComplete,
    PIController,
    TargetCoincident,
    control_step,
    desired_heading,
    path_error,
    pi_update,
)
from .dynamics import (
    ContactDegenerate,
    NormalForces,
    StateDerivative,
    StepFailure,
    Trace,
    contact_kinematics,
    drag_force,
    friction_forces,
    integrate,
    solve_normal_forces,
    state_derivative,
)
from .gait import (
    GaitMap,
    MapNotMonotone,
    MapOrientationError,
    Zone,
    ZONES,
    build_gait_map,
    canonical_gait,
    cycle_headings,
    gait_for_heading,
    limb_angle,
    load_gait_map,
    map_lookup,
    save_gait_map,
    zone_select,
)
from .harness import (
    CalibrationInput,
    CompareReport,
    ConfigInvalid,
    FollowSpec,
    Metrics,
    NonPhysical,
    PathMismatch,
    ScenarioConfig,
    calibrate_friction,
    compare_runs,
    condition_table,
    load_run,
    load_scenario,
    read_trace_csv,
    recompute_metrics,
    run_scenario,
    save_scenario,
    write_trace_csv,
)
from .model import (
    ContactSet,
    GaitParams,
    RobotParams,
    RobotState,
    WindField,
    load_config,
    save_config,
    validate_params,
    wrap_deg,
    wrap_signed_deg,
)

__version__ = "0.1.0"
