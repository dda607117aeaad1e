"""Experience splitting, track building, submap SfM, and verification."""

from .sfm import BuildParams, build_submap, bundle_adjust, triangulate_midpoint
from .split import (
    DEFAULT_MAX_SIZE,
    DEFAULT_MIN_RADIUS,
    DEFAULT_OVERLAP,
    augment_subsets,
    split_experience,
)
from .tracks import DEFAULT_GATING_RADIUS, DEFAULT_MATCH_THRESHOLD, build_tracks
from .types import (
    FrameSubset,
    InsufficientOverlap,
    SolverDiverged,
    Submap,
    Track,
    VerificationReport,
)
from .verify import VerifyThresholds, verify_submap

__all__ = [
    "BuildParams",
    "build_submap",
    "bundle_adjust",
    "triangulate_midpoint",
    "split_experience",
    "augment_subsets",
    "DEFAULT_MAX_SIZE",
    "DEFAULT_MIN_RADIUS",
    "DEFAULT_OVERLAP",
    "build_tracks",
    "DEFAULT_MATCH_THRESHOLD",
    "DEFAULT_GATING_RADIUS",
    "FrameSubset",
    "Track",
    "Submap",
    "VerificationReport",
    "InsufficientOverlap",
    "SolverDiverged",
    "VerifyThresholds",
    "verify_submap",
]
