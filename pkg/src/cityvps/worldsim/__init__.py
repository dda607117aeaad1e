"""Synthetic worlds, experiences, VIO logs, and the ground-truth oracle."""

from .experience import (
    FRAME_ID_STRIDE,
    Experience,
    Frame,
    NoiseConfig,
    SimConfig,
    corrupt_observations,
    default_camera,
    simulate_experience,
)
from .io import (
    Oracle,
    UnknownFrame,
    oracle_pose,
    read_experience,
    read_truth_sidecar,
    read_vio_log,
    read_world,
    write_experience,
    write_truth_sidecar,
    write_vio_log,
    write_world,
)
from .vio import VioLog, simulate_vio
from .world import (
    BadConfig,
    RouteNotInWorld,
    Street,
    World,
    WorldConfig,
    generate_world,
    generate_world_from_streets,
    route_path,
)

__all__ = [
    "BadConfig",
    "RouteNotInWorld",
    "Street",
    "World",
    "WorldConfig",
    "generate_world",
    "generate_world_from_streets",
    "route_path",
    "Experience",
    "Frame",
    "FRAME_ID_STRIDE",
    "NoiseConfig",
    "SimConfig",
    "default_camera",
    "simulate_experience",
    "corrupt_observations",
    "VioLog",
    "simulate_vio",
    "Oracle",
    "UnknownFrame",
    "oracle_pose",
    "read_experience",
    "read_truth_sidecar",
    "read_vio_log",
    "read_world",
    "write_experience",
    "write_truth_sidecar",
    "write_vio_log",
    "write_world",
]
