"""Feature tracks from transitive descriptor matching."""

from __future__ import annotations

import numpy as np

from .types import Track

DEFAULT_MATCH_THRESHOLD = 0.24  # 3x default descriptor noise scale
DEFAULT_GATING_RADIUS = 60.0


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _mutual_matches(desc_a: np.ndarray, desc_b: np.ndarray, threshold: float):
    """Index pairs that are mutual nearest neighbors within the threshold."""
    if desc_a.shape[0] == 0 or desc_b.shape[0] == 0:
        return []
    # Squared distances via the expansion trick.
    d2 = (
        (desc_a * desc_a).sum(axis=1)[:, None]
        + (desc_b * desc_b).sum(axis=1)[None, :]
        - 2.0 * desc_a @ desc_b.T
    )
    np.maximum(d2, 0.0, out=d2)
    nn_ab = np.argmin(d2, axis=1)
    nn_ba = np.argmin(d2, axis=0)
    pairs = []
    thr2 = threshold * threshold
    for ia, ib in enumerate(nn_ab):
        if nn_ba[ib] == ia and d2[ia, ib] <= thr2:
            pairs.append((ia, int(ib)))
    return pairs


def build_tracks(
    subset,
    frames_by_id: dict,
    match_threshold: float = DEFAULT_MATCH_THRESHOLD,
    gating_radius: float = DEFAULT_GATING_RADIUS,
) -> list:
    """Match descriptors between nearby frames and chain them into tracks.

    Frame pairs are matched only when their GPS distance is below the gating
    radius. Components that end up with two observations in one frame are
    inconsistent; the offending frame's observations are evicted and the
    remainder kept when it still spans two frames.
    """
    frame_ids = [fid for fid in subset.all_ids() if fid in frames_by_id]
    frames = [frames_by_id[fid] for fid in frame_ids]
    offsets = {}
    total = 0
    for fid, frame in zip(frame_ids, frames):
        offsets[fid] = total
        total += frame.n_observations
    if total == 0:
        return []
    uf = _UnionFind(total)
    positions = {fid: frames_by_id[fid].gps[:2] for fid in frame_ids}

    for i in range(len(frame_ids)):
        for j in range(i + 1, len(frame_ids)):
            fa, fb = frame_ids[i], frame_ids[j]
            if np.linalg.norm(positions[fa] - positions[fb]) >= gating_radius:
                continue
            pairs = _mutual_matches(frames[i].descriptors, frames[j].descriptors, match_threshold)
            for ia, ib in pairs:
                uf.union(offsets[fa] + ia, offsets[fb] + ib)

    components: dict = {}
    for fid, frame in zip(frame_ids, frames):
        base = offsets[fid]
        for oi in range(frame.n_observations):
            components.setdefault(uf.find(base + oi), []).append((fid, oi))

    tracks = []
    next_id = 0
    for key in sorted(components):
        obs = components[key]
        if len(obs) < 2:
            continue
        seen: dict = {}
        conflicted = set()
        for fid, oi in obs:
            if fid in seen:
                conflicted.add(fid)
            seen[fid] = oi
        if conflicted:
            obs = [(fid, oi) for fid, oi in obs if fid not in conflicted]
        if len(obs) < 2:
            continue
        obs.sort()
        tracks.append(Track(track_id=next_id, observations=obs))
        next_id += 1
    return tracks
