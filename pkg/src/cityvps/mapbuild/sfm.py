"""Incremental structure-from-motion with GPS-prior bundle adjustment.

A submap is reconstructed by: (1) seeding from the frame pair sharing the
most tracks, with GPS translations and INS-derived attitudes resolved by a
coarse yaw grid; (2) midpoint-triangulating the shared tracks; (3)
registering the remaining frames in covisibility order, each refined by a
robust single-pose solve; (4) re-triangulating everything and running a
full bundle adjustment that jointly minimizes robust reprojection error and
the GPS prior on camera positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..geometry import (
    Camera,
    Pose,
    RobustPrefix,
    batch_skew,
    pose_jacobian,
    pose_residuals,
    projection_terms,
    refine_pose,
    reprojection_errors,
    so3,
    solve_least_squares,
)
from ..geometry.reproject import BEHIND_RESIDUAL
from .types import FrameSubset, InsufficientOverlap, Submap, Track


@dataclass(frozen=True)
class BuildParams:
    huber_delta_px: float = 2.0
    gps_weight: float | None = None  # None: 1/sigma^2 per fix
    gps_sigma_floor: float = 0.1
    # INS gravity prior. Straight-street trajectories leave the roll about
    # the street axis unobservable to reprojection + GPS; the measured
    # gravity direction pins it. None disables.
    gravity_sigma_deg: float | None = 0.2
    min_seed_shared_tracks: int = 8
    min_register_matches: int = 4
    yaw_grid: int = 8
    seed_window: int = 6  # frames in the multi-view seed neighborhood
    min_triangulation_angle_deg: float = 1.0
    min_triangulation_depth: float = 0.05
    register_inlier_px: float = 4.0
    rmse_max: float = 3.0
    min_registered_fraction: float = 0.5
    min_landmarks: int = 10
    periodic_ba_every: int = 8
    # While fewer than this many frames are registered the map's scale still
    # hangs on very few GPS fixes: the inlier gate is loosened and a bundle
    # adjustment runs after every registration so new fixes correct it.
    early_phase_frames: int = 8
    ba_max_iterations: int = 100
    ba_rel_tol: float = 1e-10


def gps_weight_for(sigma: float, params: BuildParams) -> float:
    if params.gps_weight is not None:
        return params.gps_weight
    s = max(float(sigma), params.gps_sigma_floor)
    return 1.0 / (s * s)


# ---------------------------------------------------------------------------
# Orientation initialization from INS


def ins_orientation_chain(frames) -> dict:
    """Cumulative INS rotation per frame id, relative to the first frame."""
    chain = {}
    current = np.eye(3)
    for i, f in enumerate(frames):
        if i > 0:
            current = current @ so3.quat_to_matrix(f.ins_rel_rot)
        chain[f.frame_id] = current
    return chain


def gravity_aligned_base(gravity_body) -> np.ndarray:
    """Some body-to-world rotation consistent with the measured gravity."""
    g = np.asarray(gravity_body, dtype=float)
    g = g / np.linalg.norm(g)
    return so3.rotation_between(g, np.array([0.0, 0.0, -1.0]))


# ---------------------------------------------------------------------------
# Triangulation


def triangulate_midpoint(origins, directions, min_angle_deg: float, min_depth: float):
    """Midpoint of the rays (origin, unit direction); None when degenerate.

    Rejects tracks whose maximum pairwise ray angle is below the threshold
    or whose point lands behind (or too close to) any observing camera.
    """
    origins = np.asarray(origins, dtype=float)
    directions = np.asarray(directions, dtype=float)
    n = origins.shape[0]
    if n < 2:
        return None
    dots = np.clip(directions @ directions.T, -1.0, 1.0)
    iu = np.triu_indices(n, k=1)
    max_angle = float(np.max(np.degrees(np.arccos(dots[iu]))))
    if max_angle < min_angle_deg:
        return None
    eye = np.eye(3)
    a = np.zeros((3, 3))
    b = np.zeros(3)
    for o, d in zip(origins, directions):
        m = eye - np.outer(d, d)
        a += m
        b += m @ o
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None
    depths = np.einsum("ij,ij->i", x[None, :] - origins, directions)
    if np.any(depths <= min_depth):
        return None
    return x


def triangulate_track(track: Track, poses: dict, frames_by_id: dict, camera: Camera, params: BuildParams):
    origins = []
    directions = []
    for fid, oi in track.observations:
        pose = poses.get(fid)
        if pose is None:
            continue
        pixel = frames_by_id[fid].pixels[oi]
        origins.append(pose.t)
        directions.append(pose.rotation @ camera.ray(pixel))
    if len(origins) < 2:
        return None
    return triangulate_midpoint(
        np.array(origins),
        np.array(directions),
        params.min_triangulation_angle_deg,
        params.min_triangulation_depth,
    )


# ---------------------------------------------------------------------------
# Bundle adjustment (dense normal equations over a sparse Jacobian)


class _BAProblem:
    def __init__(self, frame_ids, track_ids, observations, gps, gps_weights, camera: Camera,
                 gravity_meas=None, gravity_sqrtw: float = 0.0):
        self.frame_ids = list(frame_ids)  # sorted
        self.track_ids = list(track_ids)  # sorted
        self.fidx = {fid: i for i, fid in enumerate(self.frame_ids)}
        self.lidx = {tid: i for i, tid in enumerate(self.track_ids)}
        # observations: (frame_id, track_id, pixel)
        self.obs_f = np.array([self.fidx[fid] for fid, _, _ in observations], dtype=int)
        self.obs_l = np.array([self.lidx[tid] for _, tid, _ in observations], dtype=int)
        self.obs_px = np.array([px for _, _, px in observations], dtype=float)
        self.gps = np.asarray(gps, dtype=float)  # (F, 3)
        self.gps_sqrtw = np.sqrt(np.asarray(gps_weights, dtype=float))  # (F,)
        self.camera = camera
        self.nf = len(self.frame_ids)
        self.nl = len(self.track_ids)
        self.nobs = self.obs_f.shape[0]
        # Optional per-frame measured gravity direction (camera frame).
        self.gravity = None if gravity_meas is None else np.asarray(gravity_meas, dtype=float)
        self.gravity_sqrtw = float(gravity_sqrtw)
        self.g_world = np.array([0.0, 0.0, -1.0])

    def pack(self, poses: dict, points: dict) -> np.ndarray:
        x = np.empty(6 * self.nf + 3 * self.nl)
        for i, fid in enumerate(self.frame_ids):
            x[6 * i : 6 * i + 6] = poses[fid].params()
        for j, tid in enumerate(self.track_ids):
            x[6 * self.nf + 3 * j : 6 * self.nf + 3 * j + 3] = points[tid]
        return x

    def unpack(self, x):
        poses = {}
        points = {}
        for i, fid in enumerate(self.frame_ids):
            poses[fid] = Pose.from_params(x[6 * i : 6 * i + 6])
        for j, tid in enumerate(self.track_ids):
            points[tid] = x[6 * self.nf + 3 * j : 6 * self.nf + 3 * j + 3].copy()
        return poses, points

    def _frame_arrays(self, x):
        rots = np.empty((self.nf, 3, 3))
        jrs = np.empty((self.nf, 3, 3))
        ts = np.empty((self.nf, 3))
        for i in range(self.nf):
            rho = x[6 * i : 6 * i + 3]
            rots[i] = so3.exp(rho)
            jrs[i] = so3.right_jacobian(rho)
            ts[i] = x[6 * i + 3 : 6 * i + 6]
        return rots, jrs, ts

    def residuals(self, x):
        rots, _, ts = self._frame_arrays(x)
        pts = x[6 * self.nf :].reshape(self.nl, 3)
        xw = pts[self.obs_l]
        t = ts[self.obs_f]
        rot = rots[self.obs_f]
        xc = np.einsum("nji,nj->ni", rot, xw - t)  # R^T (X - t)
        z = xc[:, 2]
        valid = z > 1e-6
        zs = np.where(valid, z, 1.0)
        f = self.camera.focal
        proj = np.empty((self.nobs, 2))
        proj[:, 0] = f * xc[:, 0] / zs + self.camera.cx
        proj[:, 1] = f * xc[:, 1] / zs + self.camera.cy
        r_obs = np.where(valid[:, None], self.obs_px - proj, BEHIND_RESIDUAL)
        r_gps = (ts - self.gps) * self.gps_sqrtw[:, None]
        parts = [r_obs.ravel(), r_gps.ravel()]
        if self.gravity is not None:
            g_body = np.einsum("nji,j->ni", rots, self.g_world)  # R^T g_w per frame
            parts.append(((g_body - self.gravity) * self.gravity_sqrtw).ravel())
        return np.concatenate(parts)

    def jacobian(self, x):
        rots, jrs, ts = self._frame_arrays(x)
        pts = x[6 * self.nf :].reshape(self.nl, 3)
        xw = pts[self.obs_l]
        t = ts[self.obs_f]
        rot = rots[self.obs_f]
        xc = np.einsum("nji,nj->ni", rot, xw - t)
        z = xc[:, 2]
        valid = z > 1e-6
        zs = np.where(valid, z, 1.0)
        f = self.camera.focal
        a = np.zeros((self.nobs, 2, 3))
        a[:, 0, 0] = f / zs
        a[:, 0, 2] = -f * xc[:, 0] / (zs * zs)
        a[:, 1, 1] = f / zs
        a[:, 1, 2] = -f * xc[:, 1] / (zs * zs)
        a[~valid] = 0.0

        rot_t = np.transpose(rot, (0, 2, 1))
        d_rho = -np.einsum("nij,njk->nik", a, batch_skew(xc) @ jrs[self.obs_f])
        d_t = np.einsum("nij,njk->nik", a, rot_t)  # = -A (-R^T)
        d_pt = -d_t

        # COO triplets: each observation contributes 2 rows x 9 columns.
        rows_base = 2 * np.arange(self.nobs)
        row_idx = np.repeat(rows_base, 18) + np.tile(np.repeat([0, 1], 9), self.nobs)
        pose_cols = 6 * self.obs_f
        land_cols = 6 * self.nf + 3 * self.obs_l
        col_block = np.concatenate(
            [
                pose_cols[:, None] + np.arange(6)[None, :],
                land_cols[:, None] + np.arange(3)[None, :],
            ],
            axis=1,
        )  # (nobs, 9)
        col_idx = np.repeat(col_block, 2, axis=0).ravel()
        data = np.concatenate([np.concatenate([d_rho, d_t], axis=2), d_pt], axis=2)
        data = data.transpose(0, 1, 2).reshape(self.nobs, 2, 9).reshape(-1)

        # GPS rows: d/dt = sqrt(w) I at rows 2*nobs + 3i.
        gps_rows = 2 * self.nobs + np.arange(3 * self.nf)
        gps_cols = np.repeat(6 * np.arange(self.nf) + 3, 3) + np.tile(np.arange(3), self.nf)
        gps_data = np.repeat(self.gps_sqrtw, 3)

        all_rows = [row_idx, gps_rows]
        all_cols = [col_idx, gps_cols]
        all_data = [data, gps_data]
        n_rows = 2 * self.nobs + 3 * self.nf
        if self.gravity is not None:
            # d(R^T g_w)/drho = skew(R^T g_w) Jr, 3x3 block per frame.
            g_body = np.einsum("nji,j->ni", rots, self.g_world)
            blocks = self.gravity_sqrtw * (batch_skew(g_body) @ jrs)  # (F,3,3)
            g_rows = n_rows + np.repeat(np.arange(3 * self.nf), 3)
            g_cols = (6 * np.repeat(np.arange(self.nf), 9) + np.tile(np.arange(3), 3 * self.nf))
            all_rows.append(g_rows)
            all_cols.append(g_cols)
            all_data.append(blocks.reshape(-1))
            n_rows += 3 * self.nf
        shape = (n_rows, 6 * self.nf + 3 * self.nl)
        return sp.coo_matrix(
            (np.concatenate(all_data), (np.concatenate(all_rows), np.concatenate(all_cols))),
            shape=shape,
        ).tocsr()


def bundle_adjust(poses, points, tracks_by_id, frames_by_id, camera, params: BuildParams, max_iterations=None):
    """Joint robust reprojection + GPS-prior refinement of poses and points.

    Returns (poses, points, SolveResult, rmse) where rmse is over valid
    (in-front) observations after optimization.
    """
    frame_ids = sorted(poses)
    track_ids = sorted(points)
    observations = []
    for tid in track_ids:
        for fid, oi in tracks_by_id[tid].observations:
            if fid in poses:
                observations.append((fid, tid, frames_by_id[fid].pixels[oi]))
    gps = np.array([frames_by_id[fid].gps[:3] for fid in frame_ids])
    weights = np.array([gps_weight_for(frames_by_id[fid].gps[3], params) for fid in frame_ids])
    gravity = None
    g_sqrtw = 0.0
    if params.gravity_sigma_deg is not None:
        gravity = np.array([frames_by_id[fid].ins_gravity for fid in frame_ids])
        gravity = gravity / np.linalg.norm(gravity, axis=1, keepdims=True)
        g_sqrtw = 1.0 / np.deg2rad(params.gravity_sigma_deg)
    problem = _BAProblem(frame_ids, track_ids, observations, gps, weights, camera,
                         gravity_meas=gravity, gravity_sqrtw=g_sqrtw)
    robust = RobustPrefix(n_blocks=problem.nobs, block_size=2, delta=params.huber_delta_px)
    result = solve_least_squares(
        problem.residuals,
        problem.pack(poses, points),
        jacobian=problem.jacobian,
        robust=robust,
        max_iterations=max_iterations or params.ba_max_iterations,
        rel_cost_tol=params.ba_rel_tol,
    )
    new_poses, new_points = problem.unpack(result.params)
    r = problem.residuals(result.params)[: 2 * problem.nobs].reshape(-1, 2)
    norms = np.linalg.norm(r, axis=1)
    norms = norms[norms < BEHIND_RESIDUAL * 0.5]
    rmse = float(np.sqrt(np.mean(norms * norms))) if norms.size else float("inf")
    return new_poses, new_points, result, rmse


# ---------------------------------------------------------------------------
# Incremental reconstruction


def _yaw_candidates(n: int):
    return [2.0 * np.pi * k / n for k in range(n)]


def _matches_for_frame(frame_id, frames_by_id, frame_tracks, tracks_by_id, points):
    pts = []
    pix = []
    for tid, oi in frame_tracks.get(frame_id, []):
        if tid in points:
            pts.append(points[tid])
            pix.append(frames_by_id[frame_id].pixels[oi])
    if not pts:
        return np.zeros((0, 3)), np.zeros((0, 2))
    return np.array(pts), np.array(pix)


def _window_score(poses: dict, tracks, frames_by_id, camera, params):
    """Triangulate every track visible from >= 2 of the given poses and
    score mean reprojection over those tracks' window observations.

    Tracks that fail to triangulate count as a large error so hypotheses
    cannot win by explaining away most of the evidence.
    """
    points = {}
    errors = []
    for track in tracks:
        in_window = [(f, oi) for f, oi in track.observations if f in poses]
        if len(in_window) < 2:
            continue
        x = triangulate_track(track, poses, frames_by_id, camera, params)
        if x is None:
            errors.extend([BEHIND_RESIDUAL] * len(in_window))
            continue
        points[track.track_id] = x
        for f, oi in in_window:
            e = reprojection_errors(
                poses[f], x[None, :], frames_by_id[f].pixels[oi][None, :], camera
            )[0]
            errors.append(min(e, BEHIND_RESIDUAL))
    if not points:
        return None, float("inf")
    return points, float(np.mean(errors))


def build_submap(
    subset: FrameSubset,
    tracks: list,
    frames_by_id: dict,
    camera: Camera,
    params: BuildParams | None = None,
    seed: int = 0,
    submap_id: int | None = None,
) -> Submap:
    """Reconstruct one subset into a Submap; failures come back discarded.

    Raises InsufficientOverlap when no frame pair shares enough tracks to
    seed. Non-converging optimization marks the submap discarded rather
    than raising.
    """
    params = params or BuildParams()
    frame_ids = [fid for fid in subset.all_ids() if fid in frames_by_id]
    if len(frame_ids) < 2:
        raise InsufficientOverlap("need at least two frames")
    tracks_by_id = {t.track_id: t for t in tracks}
    # frame id -> [(track_id, observation_index)] for covisibility lookups.
    frame_tracks: dict = {}
    for track in tracks:
        for fid, oi in track.observations:
            frame_tracks.setdefault(fid, []).append((track.track_id, oi))

    # Shared-track counts per frame pair.
    pair_counts: dict = {}
    for track in tracks:
        fids = [fid for fid, _ in track.observations]
        for i in range(len(fids)):
            for j in range(i + 1, len(fids)):
                key = (min(fids[i], fids[j]), max(fids[i], fids[j]))
                pair_counts[key] = pair_counts.get(key, 0) + 1
    if not pair_counts:
        raise InsufficientOverlap("no shared tracks")

    def pair_rank(item):
        (fa, fb), count = item
        same_exp = frames_by_id[fa].experience_id == frames_by_id[fb].experience_id
        return (count, same_exp, -fa, -fb)

    (seed_a, seed_b), best_count = max(pair_counts.items(), key=pair_rank)
    if best_count < params.min_seed_shared_tracks:
        raise InsufficientOverlap(f"best pair shares {best_count} tracks")

    fa, fb = frames_by_id[seed_a], frames_by_id[seed_b]
    base_a = gravity_aligned_base(fa.ins_gravity)
    same_experience = fa.experience_id == fb.experience_id
    exp_frames_a = sorted(
        (f for f in frames_by_id.values() if f.experience_id == fa.experience_id),
        key=lambda f: f.timestamp,
    )
    chains = {fa.experience_id: ins_orientation_chain(exp_frames_a)}

    # Seed window: the pair plus nearby frames of its experience. GPS noise
    # on a short two-frame baseline is enough to fold two-view geometry into
    # the wrong basin; multi-view triangulation over the window averages the
    # noise out and makes the yaw hypotheses cleanly separable.
    window_ids = {seed_a, seed_b}
    t_lo = min(fa.timestamp, fb.timestamp)
    t_hi = max(fa.timestamp, fb.timestamp)
    neighbors = sorted(
        (f for f in exp_frames_a if f.frame_id not in window_ids),
        key=lambda f: min(abs(f.timestamp - t_lo), abs(f.timestamp - t_hi)),
    )
    for f in neighbors[: max(0, params.seed_window - len(window_ids))]:
        window_ids.add(f.frame_id)

    candidates = []
    for psi in _yaw_candidates(params.yaw_grid):
        rot_a = so3.yaw_matrix(psi) @ base_a
        hyp_poses = {}
        chain = chains[fa.experience_id]
        for fid in window_ids:
            f = frames_by_id[fid]
            if f.experience_id == fa.experience_id:
                rot = rot_a @ (chain[seed_a].T @ chain[fid])
            elif fid == seed_b:
                rot = so3.yaw_matrix(psi) @ gravity_aligned_base(fb.ins_gravity)
            else:
                continue
            hyp_poses[fid] = Pose.from_matrix(rot, f.gps[:3])
        points, score = _window_score(hyp_poses, tracks, frames_by_id, camera, params)
        if points is not None and len(points) >= 4:
            candidates.append((score, psi, hyp_poses, points))
    candidates.sort(key=lambda c: c[0])
    if not candidates:
        raise InsufficientOverlap("seed triangulation failed for all yaw hypotheses")

    # Refine the leading hypotheses and keep the best refined geometry.
    best = None
    for score, psi, hyp_poses, points in candidates[:3]:
        try:
            ref_poses, ref_points, _, _ = bundle_adjust(
                hyp_poses, points, tracks_by_id, frames_by_id, camera, params, max_iterations=20
            )
        except Exception:
            continue
        _, cost = _window_score(ref_poses, tracks, frames_by_id, camera, params)
        if best is None or cost < best[0]:
            best = (cost, ref_poses)
    if best is None:
        raise InsufficientOverlap("seed refinement failed")

    poses = best[1]
    points, _ = _window_score(poses, tracks, frames_by_id, camera, params)
    poses, points, result, _ = bundle_adjust(
        poses, points, tracks_by_id, frames_by_id, camera, params, max_iterations=30
    )

    # Orientation chains for every experience present, for registration inits.
    for fid in frame_ids:
        eid = frames_by_id[fid].experience_id
        if eid not in chains:
            exp_frames = sorted(
                (f for f in frames_by_id.values() if f.experience_id == eid),
                key=lambda f: f.timestamp,
            )
            chains[eid] = ins_orientation_chain(exp_frames)

    failed: dict = {}  # frame id -> match count when registration last failed
    since_ba = 0
    while True:
        # Next frame: most observations of already-triangulated tracks.
        # Failed frames become eligible again once they can see more points.
        candidates = []
        for fid in frame_ids:
            if fid in poses:
                continue
            count = sum(1 for tid, _ in frame_tracks.get(fid, []) if tid in points)
            if count >= params.min_register_matches and count > failed.get(fid, -1):
                candidates.append((count, -fid))
        if not candidates:
            break
        count, neg_fid = max(candidates)
        fid = -neg_fid
        frame = frames_by_id[fid]
        pts3d, pix = _matches_for_frame(fid, frames_by_id, frame_tracks, tracks_by_id, points)

        # Initial rotation: INS chain from the nearest registered frame of the
        # same experience, else gravity + yaw grid scored on reprojection.
        chain = chains[frame.experience_id]
        ref = None
        for other in sorted(poses, key=lambda o: abs(frames_by_id[o].timestamp - frame.timestamp)):
            if frames_by_id[other].experience_id == frame.experience_id:
                ref = other
                break
        inits = []
        if ref is not None:
            rot = poses[ref].rotation @ (chain[ref].T @ chain[fid])
            inits.append(Pose.from_matrix(rot, frame.gps[:3]))
        else:
            base = gravity_aligned_base(frame.ins_gravity)
            for psi in _yaw_candidates(params.yaw_grid):
                inits.append(Pose.from_matrix(so3.yaw_matrix(psi) @ base, frame.gps[:3]))

        gravity = None
        if params.gravity_sigma_deg is not None:
            gravity = (frame.ins_gravity, 1.0 / np.deg2rad(params.gravity_sigma_deg))
        early = len(poses) < params.early_phase_frames
        inlier_px = params.register_inlier_px * (3.0 if early else 1.0)
        best_pose = None
        best_inliers = -1
        for init in inits:
            pose, _, _ = refine_pose(
                pts3d, pix, camera, init, huber_delta=params.huber_delta_px, gravity=gravity
            )
            errs = reprojection_errors(pose, pts3d, pix, camera)
            inliers = int((errs < inlier_px).sum())
            if inliers > best_inliers:
                best_pose, best_inliers = pose, inliers
        if best_pose is None or best_inliers < params.min_register_matches:
            failed[fid] = count
            continue
        poses[fid] = best_pose
        since_ba += 1

        # Only tracks observing the new frame can have become solvable.
        for tid, _ in frame_tracks.get(fid, []):
            if tid in points:
                continue
            track = tracks_by_id[tid]
            if sum(1 for f, _ in track.observations if f in poses) >= 2:
                x = triangulate_track(track, poses, frames_by_id, camera, params)
                if x is not None:
                    points[tid] = x
        if early or since_ba >= params.periodic_ba_every:
            poses, points, _, _ = bundle_adjust(
                poses, points, tracks_by_id, frames_by_id, camera, params, max_iterations=15
            )
            # Cleaner geometry: re-triangulate everything solvable and give
            # previously failed frames another chance.
            for track in tracks:
                if track.track_id in points:
                    continue
                if sum(1 for f, _ in track.observations if f in poses) >= 2:
                    x = triangulate_track(track, poses, frames_by_id, camera, params)
                    if x is not None:
                        points[track.track_id] = x
            failed.clear()
            since_ba = 0

    # Re-triangulate everything from the final incremental poses.
    points = {}
    for track in tracks:
        if sum(1 for f, _ in track.observations if f in poses) >= 2:
            x = triangulate_track(track, poses, frames_by_id, camera, params)
            if x is not None:
                points[track.track_id] = x

    discard_reasons = []
    if len(points) < params.min_landmarks:
        discard_reasons.append(f"only {len(points)} landmarks triangulated")
        rmse = float("inf")
        final_cost = float("inf")
    else:
        poses, points, result, rmse = bundle_adjust(
            poses, points, tracks_by_id, frames_by_id, camera, params
        )
        final_cost = result.cost
        if not result.converged:
            discard_reasons.append("bundle adjustment diverged")
        if rmse > params.rmse_max:
            discard_reasons.append(f"reprojection rmse {rmse:.2f} px exceeds {params.rmse_max}")

    registered_fraction = len(poses) / max(1, len(frame_ids))
    if registered_fraction < params.min_registered_fraction:
        discard_reasons.append(
            f"registered {len(poses)}/{len(frame_ids)} frames"
        )

    track_ids = sorted(points)
    descriptors = []
    track_observations = {}
    for tid in track_ids:
        track = tracks_by_id[tid]
        descs = [
            frames_by_id[f].descriptors[oi]
            for f, oi in track.observations
            if f in frames_by_id
        ]
        descriptors.append(np.mean(descs, axis=0))
        track_observations[tid] = [
            (f, frames_by_id[f].pixels[oi].copy())
            for f, oi in track.observations
            if f in poses
        ]

    return Submap(
        submap_id=subset.subset_id if submap_id is None else submap_id,
        experience_id=subset.experience_id,
        poses=poses,
        landmark_positions=np.array([points[tid] for tid in track_ids]).reshape(-1, 3),
        landmark_descriptors=np.array(descriptors).reshape(len(track_ids), -1)
        if descriptors
        else np.zeros((0, 0)),
        landmark_track_ids=np.array(track_ids, dtype=int),
        gps_priors={fid: frames_by_id[fid].gps.copy() for fid in poses},
        member_ids=[fid for fid in subset.member_ids if fid in poses],
        augmented_ids=[fid for fid in subset.augmented_ids if fid in poses],
        status="discarded" if discard_reasons else "built",
        reprojection_rmse=rmse,
        final_cost=final_cost,
        discard_reasons=discard_reasons,
        track_observations=track_observations,
    )
