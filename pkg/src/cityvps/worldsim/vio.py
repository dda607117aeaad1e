"""Drifting visual-inertial odometry logs in a device-local frame."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import Pose, so3


@dataclass
class VioLog:
    timestamps: np.ndarray  # (n,)
    poses: list  # Pose per timestamp, local frame (identity at t=0)
    drift_rate: float

    def __len__(self):
        return len(self.poses)


def simulate_vio(true_trajectory, drift_rate: float, seed: int) -> VioLog:
    """VIO track of a true trajectory with distance-proportional drift.

    `true_trajectory` is a sequence of (timestamp, Pose). The local frame is
    anchored at the first pose (identity at time 0), so the world-to-local
    offset is the inverse of the first true pose. Accumulated position error
    after distance d has magnitude ~ drift_rate * d: a per-log random drift
    direction plus a small random walk, with a slight yaw drift.
    """
    if drift_rate < 0.0:
        raise ValueError("drift_rate must be >= 0")
    items = list(true_trajectory)
    if not items:
        return VioLog(np.zeros(0), [], drift_rate)
    rng = np.random.default_rng(seed)
    drift_dir = rng.normal(size=3)
    drift_dir /= np.linalg.norm(drift_dir)
    yaw_factor = rng.normal(0.0, 0.02)  # rad of heading drift per meter, scaled by rate

    origin = items[0][1].inverse()
    timestamps = np.array([t for t, _ in items], dtype=float)
    poses = []
    dist = 0.0
    prev_pos = items[0][1].t
    walk = np.zeros(3)
    for k, (_, true_pose) in enumerate(items):
        step = float(np.linalg.norm(true_pose.t - prev_pos))
        dist += step
        prev_pos = true_pose.t
        if drift_rate > 0.0 and step > 0.0:
            walk = walk + rng.normal(0.0, 0.1 * drift_rate * step, size=3)
        err = drift_rate * dist * drift_dir + walk
        yaw_err = drift_rate * dist * yaw_factor
        base = origin.compose(true_pose)
        q = so3.quat_multiply(so3.quat_from_rotvec([0.0, 0.0, yaw_err]), base.q)
        poses.append(Pose(q, base.t + err))
    return VioLog(timestamps, poses, drift_rate)
