"""Ideal pinhole camera and projection.

Camera frame convention: +z forward (optical axis), +x right, +y down.
Projection of a world point through a camera whose pose maps camera
coordinates to world coordinates: x_cam = R^T (x_world - t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pose import Pose

# Depth below this is treated as behind the camera.
MIN_DEPTH = 1e-9


@dataclass(frozen=True)
class Camera:
    focal: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not self.focal > 0.0:
            raise ValueError("focal length must be positive")
        if not (0.0 <= self.cx <= self.width and 0.0 <= self.cy <= self.height):
            raise ValueError("principal point outside image bounds")

    def project_camera_frame(self, point_cam):
        """Pixel of a camera-frame point, or None when depth <= MIN_DEPTH."""
        x, y, z = point_cam
        if z <= MIN_DEPTH:
            return None
        return np.array([self.focal * x / z + self.cx, self.focal * y / z + self.cy])

    def project_camera_frame_many(self, points_cam):
        """Vectorized projection; rows with depth <= MIN_DEPTH yield NaN pixels."""
        points_cam = np.asarray(points_cam, dtype=float)
        z = points_cam[:, 2]
        valid = z > MIN_DEPTH
        zsafe = np.where(valid, z, 1.0)
        px = np.empty((points_cam.shape[0], 2))
        px[:, 0] = self.focal * points_cam[:, 0] / zsafe + self.cx
        px[:, 1] = self.focal * points_cam[:, 1] / zsafe + self.cy
        px[~valid] = np.nan
        return px

    def in_bounds(self, pixel):
        u, v = pixel
        return 0.0 <= u < self.width and 0.0 <= v < self.height

    def ray(self, pixel):
        """Unit ray direction in the camera frame through a pixel."""
        u, v = pixel
        d = np.array([(u - self.cx) / self.focal, (v - self.cy) / self.focal, 1.0])
        return d / np.linalg.norm(d)


def project(point_world, pose: Pose, camera: Camera):
    """Pixel coordinates of a world point, or None if behind the camera."""
    point_cam = pose.rotation.T @ (np.asarray(point_world, dtype=float) - pose.t)
    return camera.project_camera_frame(point_cam)


def backproject(pixel, depth, pose: Pose, camera: Camera):
    """World point at the given camera-frame depth along the pixel's ray."""
    u, v = pixel
    point_cam = np.array(
        [(u - camera.cx) / camera.focal * depth, (v - camera.cy) / camera.focal * depth, depth]
    )
    return pose.apply(point_cam)
