"""Rigid fusion of verified submaps into one geo-aligned global map.

Each submap gets a 7DoF similarity transform. The joint objective couples
submaps through frames reconstructed in more than one of them (position
difference plus a rotation-consistency term) and anchors everything to the
GPS priors of the reconstructed frames. Transforms are initialized by
closed-form alignment of each submap's camera positions onto its GPS fixes
(or warm-started during map updates), then refined with the shared solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, Sim3, so3, solve_least_squares, umeyama
from .mapbuild.types import SolverDiverged, Submap


class UnknownSubmap(KeyError):
    """Operation referenced a submap id that is not in the map."""


@dataclass(frozen=True)
class FusionParams:
    gps_weight: float | None = None  # None: 1/sigma^2 per fix
    gps_sigma_floor: float = 0.1
    rotation_weight: float = 1.0  # meters of residual per radian of disagreement
    tile_size: float = 100.0
    bounding_margin: float = 20.0
    max_iterations: int = 150
    rel_cost_tol: float = 1e-10


@dataclass
class SharedFrameLink:
    frame_id: int
    entries: list  # (submap_id, Pose of the frame in that submap)


@dataclass
class FusionReport:
    converged: bool = True
    final_cost: float = 0.0
    iterations: int = 0
    link_displacements: dict = field(default_factory=dict)  # frame_id -> meters
    mean_gps_residual: float = float("nan")
    mean_link_displacement: float = float("nan")


@dataclass
class GlobalMap:
    submaps: dict  # id -> Submap (built and verified only)
    transforms: dict  # id -> Sim3
    tile_size: float
    tiles: dict = field(default_factory=dict)  # (ix, iy) -> sorted submap ids
    bounding_circles: dict = field(default_factory=dict)  # id -> (center_xy, r)
    report: FusionReport = field(default_factory=FusionReport)
    bounding_margin: float = 20.0

    def submap_ids(self):
        return sorted(self.submaps)

    def global_pose(self, submap_id: int, frame_id: int) -> Pose:
        return self.transforms[submap_id].apply_pose(self.submaps[submap_id].poses[frame_id])


def collect_links(submaps) -> list:
    """One link per frame reconstructed in two or more submaps."""
    by_frame: dict = {}
    for sm in sorted(submaps, key=lambda s: s.submap_id):
        for fid in sorted(sm.poses):
            by_frame.setdefault(fid, []).append((sm.submap_id, sm.poses[fid]))
    return [
        SharedFrameLink(fid, entries)
        for fid, entries in sorted(by_frame.items())
        if len(entries) >= 2
    ]


def _gps_rows(submaps, params: FusionParams):
    """(submap_id, position_in_submap, gps_xyz, sqrt_weight) per anchored frame."""
    rows = []
    for sm in sorted(submaps, key=lambda s: s.submap_id):
        for fid in sorted(sm.poses):
            prior = sm.gps_priors.get(fid)
            if prior is None:
                continue
            if params.gps_weight is not None:
                w = params.gps_weight
            else:
                sigma = max(float(prior[3]), params.gps_sigma_floor)
                w = 1.0 / (sigma * sigma)
            rows.append((sm.submap_id, sm.poses[fid].t, np.asarray(prior[:3], dtype=float), np.sqrt(w)))
    return rows


class _FusionProblem:
    """Residuals/Jacobian over stacked [rotvec, t, log s] per submap."""

    def __init__(self, submap_ids, links, gps_rows, rotation_weight):
        self.ids = list(submap_ids)
        self.index = {sid: i for i, sid in enumerate(self.ids)}
        self.rotation_weight = rotation_weight
        self.pairs = []  # (idx_k, idx_l, pos_k, pos_l, rot_k, rot_l, frame_id)
        for link in links:
            entries = [e for e in link.entries if e[0] in self.index]
            for a in range(len(entries)):
                for b in range(a + 1, len(entries)):
                    (sk, pk), (sl, pl) = entries[a], entries[b]
                    self.pairs.append(
                        (self.index[sk], self.index[sl], pk.t, pl.t,
                         pk.rotation, pl.rotation, link.frame_id)
                    )
        self.gps = [(self.index[sid], pos, gps, sw) for sid, pos, gps, sw in gps_rows]
        self.n = len(self.ids)

    def pack(self, transforms: dict) -> np.ndarray:
        return np.concatenate([transforms[sid].params() for sid in self.ids])

    def unpack(self, x) -> dict:
        return {sid: Sim3.from_params(x[7 * i : 7 * i + 7]) for i, sid in enumerate(self.ids)}

    def _terms(self, x):
        rots = [so3.exp(x[7 * i : 7 * i + 3]) for i in range(self.n)]
        ts = [x[7 * i + 3 : 7 * i + 6] for i in range(self.n)]
        ss = [float(np.exp(x[7 * i + 6])) for i in range(self.n)]
        return rots, ts, ss

    def residuals(self, x):
        rots, ts, ss = self._terms(x)
        out = []
        for ik, il, pk, pl, rk, rl, _ in self.pairs:
            gk = ss[ik] * rots[ik] @ pk + ts[ik]
            gl = ss[il] * rots[il] @ pl + ts[il]
            out.append(gk - gl)
            q = rots[ik] @ rk @ (rots[il] @ rl).T
            out.append(self.rotation_weight * so3.log(q))
        for i, pos, gps, sw in self.gps:
            out.append(sw * (ss[i] * rots[i] @ pos + ts[i] - gps))
        return np.concatenate(out) if out else np.zeros(0)

    def jacobian(self, x):
        rots, ts, ss = self._terms(x)
        jrs = [so3.right_jacobian(x[7 * i : 7 * i + 3]) for i in range(self.n)]
        n_rows = 6 * len(self.pairs) + 3 * len(self.gps)
        jac = np.zeros((n_rows, 7 * self.n))
        row = 0
        for ik, il, pk, pl, rk, rl, _ in self.pairs:
            for sign, i, p in ((1.0, ik, pk), (-1.0, il, pl)):
                base = 7 * i
                jac[row : row + 3, base : base + 3] = (
                    -sign * ss[i] * rots[i] @ so3.skew(p) @ jrs[i]
                )
                jac[row : row + 3, base + 3 : base + 6] = sign * np.eye(3)
                jac[row : row + 3, base + 6] = sign * ss[i] * rots[i] @ p
            row += 3
            q = rots[ik] @ rk @ (rots[il] @ rl).T
            phi = so3.log(q)
            jinv = so3.right_jacobian_inv(phi)
            y = rk @ (rots[il] @ rl).T  # Q = R_k Y with Y fixed by the frames
            jac[row : row + 3, 7 * ik : 7 * ik + 3] = (
                self.rotation_weight * jinv @ y.T @ jrs[ik]
            )
            jac[row : row + 3, 7 * il : 7 * il + 3] = (
                -self.rotation_weight * jinv @ rots[il] @ jrs[il]
            )
            row += 3
        for i, pos, gps, sw in self.gps:
            base = 7 * i
            jac[row : row + 3, base : base + 3] = -sw * ss[i] * rots[i] @ so3.skew(pos) @ jrs[i]
            jac[row : row + 3, base + 3 : base + 6] = sw * np.eye(3)
            jac[row : row + 3, base + 6] = sw * ss[i] * rots[i] @ pos
            row += 3
        return jac


def _initial_transform(submap: Submap, params: FusionParams) -> Sim3:
    """Closed-form alignment of the submap's camera positions onto its GPS fixes."""
    src = []
    dst = []
    for fid in sorted(submap.poses):
        prior = submap.gps_priors.get(fid)
        if prior is None:
            continue
        src.append(submap.poses[fid].t)
        dst.append(np.asarray(prior[:3], dtype=float))
    if len(src) < 3:
        return Sim3.identity()
    return umeyama(np.array(src), np.array(dst), with_scale=True)


def fuse(
    submaps,
    links=None,
    params: FusionParams | None = None,
    warm_start: dict | None = None,
):
    """Jointly estimate one Sim3 per submap; returns (transforms, report).

    Raises SolverDiverged when the optimization fails to converge.
    """
    params = params or FusionParams()
    submaps = sorted(submaps, key=lambda s: s.submap_id)
    if not submaps:
        return {}, FusionReport()
    if links is None:
        links = collect_links(submaps)
    ids = [sm.submap_id for sm in submaps]
    problem = _FusionProblem(ids, links, _gps_rows(submaps, params), params.rotation_weight)

    init = {}
    for sm in submaps:
        if warm_start is not None and sm.submap_id in warm_start:
            init[sm.submap_id] = warm_start[sm.submap_id]
        else:
            init[sm.submap_id] = _initial_transform(sm, params)

    result = solve_least_squares(
        problem.residuals,
        problem.pack(init),
        jacobian=problem.jacobian,
        max_iterations=params.max_iterations,
        rel_cost_tol=params.rel_cost_tol,
    )
    if not result.converged:
        raise SolverDiverged(f"fusion did not converge: {result.message}")
    transforms = problem.unpack(result.params)

    report = FusionReport(
        converged=result.converged,
        final_cost=result.cost,
        iterations=result.iterations,
    )
    displacements = {}
    for ik, il, pk, pl, _, _, fid in problem.pairs:
        tk = transforms[problem.ids[ik]]
        tl = transforms[problem.ids[il]]
        d = float(np.linalg.norm(tk.apply(pk) - tl.apply(pl)))
        displacements[fid] = max(displacements.get(fid, 0.0), d)
    report.link_displacements = displacements
    if displacements:
        report.mean_link_displacement = float(np.mean(list(displacements.values())))
    gps_res = [
        float(np.linalg.norm(transforms[problem.ids[i]].apply(pos) - gps))
        for i, pos, gps, _ in problem.gps
    ]
    if gps_res:
        report.mean_gps_residual = float(np.mean(gps_res))
    return transforms, report


# ---------------------------------------------------------------------------
# Geo-tile index


def _circle_tiles(center, radius, tile_size):
    """All integer tiles whose square intersects the circle."""
    cx, cy = float(center[0]), float(center[1])
    ix0 = int(np.floor((cx - radius) / tile_size))
    ix1 = int(np.floor((cx + radius) / tile_size))
    iy0 = int(np.floor((cy - radius) / tile_size))
    iy1 = int(np.floor((cy + radius) / tile_size))
    tiles = []
    for ix in range(ix0, ix1 + 1):
        for iy in range(iy0, iy1 + 1):
            # distance from circle center to the tile square
            qx = min(max(cx, ix * tile_size), (ix + 1) * tile_size)
            qy = min(max(cy, iy * tile_size), (iy + 1) * tile_size)
            if (qx - cx) ** 2 + (qy - cy) ** 2 <= radius * radius:
                tiles.append((ix, iy))
    return tiles


def transformed_bounding_circle(submap: Submap, transform: Sim3, margin: float):
    pts = transform.apply_many(submap.positions())[:, :2]
    center = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    radius = float(np.linalg.norm(pts - center, axis=1).max()) + margin
    return center, radius


def build_tile_index(submaps: dict, transforms: dict, tile_size: float, margin: float):
    circles = {}
    tiles: dict = {}
    for sid in sorted(submaps):
        center, radius = transformed_bounding_circle(submaps[sid], transforms[sid], margin)
        circles[sid] = (center, radius)
        for key in _circle_tiles(center, radius, tile_size):
            tiles.setdefault(key, []).append(sid)
    for key in tiles:
        tiles[key] = sorted(tiles[key])
    return tiles, circles


def build_global_map(submaps, params: FusionParams | None = None) -> GlobalMap:
    """Fuse built submaps into a fresh GlobalMap (discarded ones rejected)."""
    params = params or FusionParams()
    usable = [sm for sm in submaps if sm.status == "built"]
    transforms, report = fuse(usable, params=params)
    submap_dict = {sm.submap_id: sm for sm in usable}
    tiles, circles = build_tile_index(submap_dict, transforms, params.tile_size, params.bounding_margin)
    return GlobalMap(
        submaps=submap_dict,
        transforms=transforms,
        tile_size=params.tile_size,
        tiles=tiles,
        bounding_circles=circles,
        report=report,
        bounding_margin=params.bounding_margin,
    )


def update_map(global_map: GlobalMap, new_submaps, params: FusionParams | None = None) -> GlobalMap:
    """Fuse new verified submaps into an existing map, warm-started.

    With no new submaps the map is returned unchanged (bit-identical
    transforms). New submaps start from their GPS alignment; existing ones
    from their current transforms.
    """
    params = params or FusionParams()
    new_submaps = [sm for sm in new_submaps if sm.status == "built"]
    if not new_submaps:
        return global_map
    merged = dict(global_map.submaps)
    for sm in new_submaps:
        merged[sm.submap_id] = sm
    warm = dict(global_map.transforms)
    transforms, report = fuse(list(merged.values()), params=params, warm_start=warm)
    tiles, circles = build_tile_index(merged, transforms, params.tile_size, params.bounding_margin)
    return GlobalMap(
        submaps=merged,
        transforms=transforms,
        tile_size=params.tile_size,
        tiles=tiles,
        bounding_circles=circles,
        report=report,
        bounding_margin=params.bounding_margin,
    )


def remove_submaps(global_map: GlobalMap, ids, params: FusionParams | None = None) -> GlobalMap:
    """Drop submaps and re-run fusion on the remainder."""
    params = params or FusionParams()
    ids = list(ids)
    for sid in ids:
        if sid not in global_map.submaps:
            raise UnknownSubmap(sid)
    remaining = {sid: sm for sid, sm in global_map.submaps.items() if sid not in set(ids)}
    if not remaining:
        return GlobalMap(submaps={}, transforms={}, tile_size=params.tile_size,
                         bounding_margin=params.bounding_margin)
    warm = {sid: t for sid, t in global_map.transforms.items() if sid in remaining}
    transforms, report = fuse(list(remaining.values()), params=params, warm_start=warm)
    tiles, circles = build_tile_index(remaining, transforms, params.tile_size, params.bounding_margin)
    return GlobalMap(
        submaps=remaining,
        transforms=transforms,
        tile_size=params.tile_size,
        tiles=tiles,
        bounding_circles=circles,
        report=report,
        bounding_margin=params.bounding_margin,
    )
