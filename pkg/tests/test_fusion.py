"""Submap fusion: links, Sim3 recovery, updates, tile index."""

import numpy as np
import pytest

from cityvps.fusion import (
    FusionParams,
    GlobalMap,
    SharedFrameLink,
    UnknownSubmap,
    _FusionProblem,
    _gps_rows,
    build_global_map,
    build_tile_index,
    collect_links,
    fuse,
    remove_submaps,
    transformed_bounding_circle,
    update_map,
)
from cityvps.geometry import Pose, Sim3, numeric_jacobian, so3
from cityvps.mapbuild import Submap


def make_submap(submap_id, poses, gps_sigma=5.0, experience_id=1, gps_override=None):
    gps_priors = {}
    for fid, pose in poses.items():
        xyz = pose.t if gps_override is None else gps_override[fid]
        gps_priors[fid] = np.concatenate([xyz, [gps_sigma]])
    return Submap(
        submap_id=submap_id,
        experience_id=experience_id,
        poses=dict(poses),
        landmark_positions=np.zeros((0, 3)),
        landmark_descriptors=np.zeros((0, 16)),
        landmark_track_ids=np.zeros(0, dtype=int),
        gps_priors=gps_priors,
        member_ids=sorted(poses),
        augmented_ids=[],
    )


def line_poses(n=10, start=0.0, spacing=5.0, base_fid=0, y=0.0):
    poses = {}
    for k in range(n):
        yaw = so3.quat_from_rotvec([0.0, 0.0, 0.3 * (k % 3)])
        poses[base_fid + k] = Pose(yaw, np.array([start + spacing * k, y + 0.5 * (k % 2), 1.8]))
    return poses


class TestLinks:
    def test_disjoint_maps_no_links(self):
        a = make_submap(1, line_poses(5, base_fid=0))
        b = make_submap(2, line_poses(5, base_fid=100))
        assert collect_links([a, b]) == []

    def test_shared_frame_one_link(self):
        a = make_submap(1, line_poses(5, base_fid=0))
        b = make_submap(2, line_poses(5, base_fid=4))  # frame 4 in both
        links = collect_links([a, b])
        assert len(links) == 1
        assert links[0].frame_id == 4
        assert sorted(sid for sid, _ in links[0].entries) == [1, 2]


class TestFuse:
    def test_identity_fixed_point(self):
        # Submap already expressed in the GPS frame: transform ~ identity.
        sm = make_submap(1, line_poses(12))
        transforms, report = fuse([sm])
        t = transforms[1]
        assert np.linalg.norm(t.t) < 1e-6
        assert abs(t.s - 1.0) < 1e-9
        assert so3.geodesic_angle(t.q, np.array([1.0, 0, 0, 0])) < 1e-8
        assert report.mean_gps_residual < 1e-6

    def test_recovers_injected_sim3(self):
        poses = line_poses(12)
        original = make_submap(1, poses)
        injected = Sim3(so3.quat_from_rotvec([0.05, -0.1, 0.8]), np.array([40.0, -25.0, 3.0]), 1.4)
        copy_poses = {fid: injected.apply_pose(p) for fid, p in poses.items()}
        copy = make_submap(2, copy_poses, gps_override={fid: p.t for fid, p in poses.items()})
        transforms, report = fuse([original, copy])
        # T_copy o S == T_orig within 1e-6 (checked on rotation, t, s).
        lhs = transforms[2].compose(injected)
        rhs = transforms[1]
        assert np.linalg.norm(lhs.t - rhs.t) < 1e-6
        assert abs(lhs.s - rhs.s) < 1e-6
        assert so3.geodesic_angle(lhs.q, rhs.q) < 1e-6
        assert report.mean_link_displacement < 1e-6

    def test_cost_not_worse_than_identity(self):
        rng = np.random.default_rng(0)
        poses_a = line_poses(10)
        poses_b = {fid: Pose(p.q, p.t + rng.normal(scale=0.3, size=3)) for fid, p in line_poses(10, base_fid=5).items()}
        a = make_submap(1, poses_a)
        b = make_submap(2, poses_b)
        links = collect_links([a, b])
        params = FusionParams()
        problem = _FusionProblem([1, 2], links, _gps_rows([a, b], params), params.rotation_weight)
        transforms, _ = fuse([a, b], links)
        identity_cost = 0.5 * float(np.sum(problem.residuals(problem.pack({1: Sim3.identity(), 2: Sim3.identity()})) ** 2))
        final_cost = 0.5 * float(np.sum(problem.residuals(problem.pack(transforms)) ** 2))
        assert final_cost <= identity_cost + 1e-12

    def test_gps_residual_not_worse_than_start(self):
        rng = np.random.default_rng(3)
        warp = Sim3(so3.quat_from_rotvec([0, 0, 0.3]), np.array([10.0, 5.0, 0.0]), 1.1)
        poses = line_poses(10)
        noisy = {fid: warp.apply_pose(Pose(p.q, p.t + rng.normal(scale=0.2, size=3))) for fid, p in poses.items()}
        sm = make_submap(1, noisy, gps_override={fid: p.t for fid, p in poses.items()})
        params = FusionParams()
        problem = _FusionProblem([1], [], _gps_rows([sm], params), params.rotation_weight)
        transforms, report = fuse([sm], params=params)
        start = np.sqrt(np.mean(problem.residuals(problem.pack({1: Sim3.identity()})) ** 2))
        assert report.mean_gps_residual <= start

    def test_gauge_relation_at_zero_gps_weight(self):
        # With the GPS term off and a connected link graph, applying one
        # global Sim3 to every transform rescales link displacements by the
        # global scale and changes nothing else.
        poses = line_poses(10)
        a = make_submap(1, poses)
        shifted = {fid: Pose(p.q, p.t + np.array([0.05, 0.0, 0.0])) for fid, p in poses.items()}
        b = make_submap(2, shifted)
        links = collect_links([a, b])
        params = FusionParams(gps_weight=0.0)
        transforms, report = fuse([a, b], links, params=params)

        g = Sim3(so3.quat_from_rotvec([0.2, 0.1, -0.4]), np.array([3.0, 7.0, -1.0]), 1.7)
        moved = {sid: g.compose(t) for sid, t in transforms.items()}
        for link in links:
            (sk, pk), (sl, pl) = link.entries
            d0 = np.linalg.norm(transforms[sk].apply(pk.t) - transforms[sl].apply(pl.t))
            d1 = np.linalg.norm(moved[sk].apply(pk.t) - moved[sl].apply(pl.t))
            assert d1 == pytest.approx(g.s * d0, abs=1e-9)

    def test_jacobian_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        poses_a = line_poses(6)
        poses_b = line_poses(6, base_fid=3)
        a = make_submap(1, poses_a)
        b = make_submap(2, poses_b)
        params = FusionParams()
        problem = _FusionProblem([1, 2], collect_links([a, b]), _gps_rows([a, b], params), params.rotation_weight)
        x = rng.normal(scale=0.2, size=14)
        analytic = problem.jacobian(x)
        numeric = numeric_jacobian(problem.residuals, x)
        scale = max(1.0, np.abs(analytic).max())
        assert np.abs(analytic - numeric).max() / scale < 1e-5


class TestMapLifecycle:
    def build_map(self):
        a = make_submap(1, line_poses(10))
        b = make_submap(2, line_poses(10, base_fid=5, start=25.0))
        return build_global_map([a, b])

    def test_update_with_nothing_is_identity(self):
        gmap = self.build_map()
        same = update_map(gmap, [])
        assert same is gmap

    def test_disjoint_addition_leaves_transforms(self):
        gmap = self.build_map()
        far = make_submap(3, line_poses(8, base_fid=1000, start=5000.0))
        updated = update_map(gmap, [far])
        for sid in gmap.transforms:
            dt = np.linalg.norm(updated.transforms[sid].t - gmap.transforms[sid].t)
            da = so3.geodesic_angle(updated.transforms[sid].q, gmap.transforms[sid].q)
            assert dt < 1e-9 and da < 1e-9
        assert 3 in updated.transforms

    def test_remove_roundtrip(self):
        gmap = self.build_map()
        extra = make_submap(3, line_poses(8, base_fid=9, start=45.0))
        bigger = update_map(gmap, [extra])
        back = remove_submaps(bigger, [3])
        assert sorted(back.submaps) == sorted(gmap.submaps)
        for sid in gmap.transforms:
            assert np.linalg.norm(back.transforms[sid].t - gmap.transforms[sid].t) < 1e-6

    def test_remove_all_and_unknown(self):
        gmap = self.build_map()
        empty = remove_submaps(gmap, [1, 2])
        assert empty.submaps == {} and empty.tiles == {}
        with pytest.raises(UnknownSubmap):
            remove_submaps(gmap, [99])

    def test_discarded_submaps_excluded(self):
        a = make_submap(1, line_poses(10))
        bad = make_submap(2, line_poses(10, base_fid=5))
        bad.status = "discarded"
        gmap = build_global_map([a, bad])
        assert sorted(gmap.submaps) == [1]


class TestTileIndex:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        submaps = {}
        transforms = {}
        for sid in range(12):
            start = rng.uniform(0, 800)
            y = rng.uniform(0, 800)
            submaps[sid] = make_submap(sid, line_poses(8, start=start, y=y, base_fid=100 * sid))
            transforms[sid] = Sim3.identity()
        tiles, circles = build_tile_index(submaps, transforms, tile_size=100.0, margin=20.0)
        for key, ids in tiles.items():
            assert ids == sorted(ids)
        # brute force: recompute membership per tile
        for sid, (center, radius) in circles.items():
            for key, ids in tiles.items():
                ix, iy = key
                qx = min(max(center[0], ix * 100.0), (ix + 1) * 100.0)
                qy = min(max(center[1], iy * 100.0), (iy + 1) * 100.0)
                intersects = (qx - center[0]) ** 2 + (qy - center[1]) ** 2 <= radius**2
                assert (sid in ids) == intersects

    def test_bounding_circle_covers_positions(self):
        sm = make_submap(1, line_poses(10))
        t = Sim3(so3.quat_from_rotvec([0, 0, 1.0]), np.array([50.0, 10.0, 0.0]), 2.0)
        center, radius = transformed_bounding_circle(sm, t, margin=20.0)
        pts = t.apply_many(sm.positions())[:, :2]
        assert np.all(np.linalg.norm(pts - center, axis=1) <= radius - 19.99)
