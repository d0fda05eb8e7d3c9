"""Point cloud registration and cost-aware motion planning for a robotic welding cell."""

from pathlib import Path

from ._weldplan import (
    ConfigError,
    EmptyCloud,
    Error,
    InvalidArgument,
    KinematicChain,
    NoCorrespondences,
    ParseError,
    Transform,
    Workcell,
    acceptance_probability,
    c_orient,
    c_pos,
    cad_cloud,
    don_filter,
    fk,
    icp,
    ik,
    integral_cost,
    jacobian,
    load_workcell,
    path_length,
    plan,
    planner_names,
    quaternion_distance,
    reference_chain,
    register_workpiece,
    rotation_distance,
    sensor_cloud,
)

__version__ = "0.1.0"


def default_config() -> Path:
    """Path of the bundled TKY workcell config."""
    return Path(__file__).parent / "share" / "configs" / "tky_workcell.yaml"
