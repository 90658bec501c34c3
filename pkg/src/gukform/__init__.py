"""Formation tracking of nonholonomic wheeled robots with region constraints.

Library layout:
    topology    communication digraph, augmented Laplacian, gain condition
    robot       differential-drive descriptor dynamics
    guk         generalized Udwadia-Kalaba constrained-dynamics core
    formation   time-varying formation offsets, errors, tracking force
    region      rectangular region constraint via a tangent barrier
    engine      closed-loop fixed-step simulation, traces, metrics
    scenario    JSON scenario files and presets
    report      figure-data CSV files and rendered figures
    cli         `gukform` command-line entry point
"""

from .engine import RunSummary, ScenarioConfig, SimTrace, compute_metrics, run
from .formation import (
    CircularFormation,
    ConstantRadius,
    CosineSineRadius,
    LineSineLeader,
    SampledFormation,
    StationaryLeader,
)
from .guk import BaumgarteGains, EqualityConstraint
from .region import RegionSpec
from .robot import RobotParams, StackedState
from .scenario import load_scenario, scenario_from_dict
from .topology import (
    AugmentedTopology,
    build_augmented_laplacian,
    check_gains,
    gain_threshold,
    has_spanning_tree,
)

__all__ = [
    "AugmentedTopology",
    "BaumgarteGains",
    "CircularFormation",
    "ConstantRadius",
    "CosineSineRadius",
    "EqualityConstraint",
    "LineSineLeader",
    "RegionSpec",
    "RobotParams",
    "RunSummary",
    "SampledFormation",
    "ScenarioConfig",
    "SimTrace",
    "StackedState",
    "StationaryLeader",
    "build_augmented_laplacian",
    "check_gains",
    "compute_metrics",
    "gain_threshold",
    "has_spanning_tree",
    "load_scenario",
    "run",
    "scenario_from_dict",
]

__version__ = "0.1.0"
