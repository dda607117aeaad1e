"""Pose algebra, camera projection, robust losses, and the shared solver."""

from . import so3
from .camera import MIN_DEPTH, Camera, backproject, project
from .least_squares import (
    NonFinite,
    RobustPrefix,
    SolveResult,
    numeric_jacobian,
    robust_cost,
    solve_least_squares,
)
from .pose import Pose, Sim3, umeyama
from .reproject import (
    BEHIND_RESIDUAL,
    batch_skew,
    pose_jacobian,
    pose_residuals,
    projection_terms,
    refine_pose,
    reprojection_errors,
)
from .robust import HUBER_METERS, HUBER_PIXELS, huber, huber_loss_many, huber_weight_many


class Landmark:
    """3D localization landmark: world position, descriptor, unique id."""

    __slots__ = ("id", "position", "descriptor")

    def __init__(self, id, position, descriptor):
        import numpy as np

        self.id = int(id)
        self.position = np.asarray(position, dtype=float).reshape(3)
        self.descriptor = np.asarray(descriptor, dtype=float).ravel()

    def __repr__(self):
        return f"Landmark(id={self.id}, position={self.position.tolist()})"


__all__ = [
    "so3",
    "Camera",
    "MIN_DEPTH",
    "project",
    "backproject",
    "Pose",
    "Sim3",
    "umeyama",
    "Landmark",
    "huber",
    "huber_loss_many",
    "huber_weight_many",
    "HUBER_PIXELS",
    "HUBER_METERS",
    "NonFinite",
    "RobustPrefix",
    "SolveResult",
    "robust_cost",
    "numeric_jacobian",
    "solve_least_squares",
    "BEHIND_RESIDUAL",
    "batch_skew",
    "projection_terms",
    "pose_residuals",
    "pose_jacobian",
    "refine_pose",
    "reprojection_errors",
]
