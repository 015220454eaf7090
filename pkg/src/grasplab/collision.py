"""Parallel-jaw collision checking against point clouds.

The gripper is modeled in the grasp frame as four axis-aligned boxes: the
closing region between the fingers (centered at the origin), the two
fingers flanking it along +-Y, and the back plate behind -X. The approach
direction is +X. A grasp collides when any scene point lies strictly
inside a finger or the back plate; points in the closing region are the
ones being grasped, not collisions.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import Grasp, GripperParams, PointCloud, grasp_frame, world_to_grasp
from .sampling import EmptyRegionError

BOUNDARY_TOL = 1e-12  # points this close to a box face count as outside

__all__ = [
    "Box3",
    "GripperVolume",
    "gripper_volume",
    "check_collision",
    "filter_collision_free",
    "closing_region_points",
]


@dataclass(frozen=True, eq=False)
class Box3:
    """Axis-aligned box given by min/max corners (m)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(3)
        hi = np.asarray(self.hi, dtype=float).reshape(3)
        if np.any(hi <= lo):
            raise ValueError(f"box has non-positive extent: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def contains_strict(self, points: np.ndarray) -> np.ndarray:
        """Strict interior test with BOUNDARY_TOL shrink; (N,) bool."""
        p = np.atleast_2d(points)
        return np.all(p > self.lo + BOUNDARY_TOL, axis=1) & np.all(p < self.hi - BOUNDARY_TOL, axis=1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Inclusive membership with BOUNDARY_TOL slack; (N,) bool."""
        p = np.atleast_2d(points)
        return np.all(p >= self.lo - BOUNDARY_TOL, axis=1) & np.all(p <= self.hi + BOUNDARY_TOL, axis=1)


@dataclass(frozen=True, eq=False)
class GripperVolume:
    """Gripper boxes in the grasp frame; fingers abut the closing region at y = +-W/2."""

    closing: Box3
    finger_pos: Box3
    finger_neg: Box3
    back: Box3

    @property
    def obstacles(self) -> tuple[Box3, Box3, Box3]:
        return (self.finger_pos, self.finger_neg, self.back)

    @property
    def bounding_radius(self) -> float:
        """Radius of the origin-centered sphere enclosing every box."""
        return max(
            float(np.linalg.norm(np.maximum(np.abs(b.lo), np.abs(b.hi))))
            for b in (self.closing, self.finger_pos, self.finger_neg, self.back)
        )


def gripper_volume(s: GripperParams) -> GripperVolume:
    """Box decomposition of a gripper; every extent traces back to (D, W, H, T)."""
    d2, w2, h2, t = s.depth / 2.0, s.width / 2.0, s.height / 2.0, s.thickness
    return GripperVolume(
        closing=Box3((-d2, -w2, -h2), (d2, w2, h2)),
        finger_pos=Box3((-d2, w2, -h2), (d2, w2 + t, h2)),
        finger_neg=Box3((-d2, -w2 - t, -h2), (d2, -w2, h2)),
        back=Box3((-d2 - t, -w2 - t, -h2), (-d2, w2 + t, h2)),
    )


def _collides(points_grasp: np.ndarray, volume: GripperVolume) -> bool:
    return any(bool(np.any(box.contains_strict(points_grasp))) for box in volume.obstacles)


def check_collision(cloud: PointCloud, g: Grasp, s: GripperParams) -> bool:
    """True iff any cloud point lies strictly inside a finger or the back plate."""
    if len(cloud) == 0:
        return False
    q = world_to_grasp(grasp_frame(g), cloud.points)
    return _collides(q, gripper_volume(s))


def _worker_count() -> int:
    raw = os.environ.get("GRASPLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def filter_collision_free(
    candidates: list[Grasp],
    scene_cloud: PointCloud,
    s: GripperParams,
) -> list[Grasp]:
    """Order-preserving subsequence of candidates that pass check_collision.

    The scene is indexed once; each grasp only tests points within the
    gripper's bounding sphere. Candidates may be checked on up to
    GRASPLAB_THREADS workers; results merge in input order.
    """
    if not candidates or len(scene_cloud) == 0:
        return list(candidates)
    volume = gripper_volume(s)
    radius = volume.bounding_radius + 1e-9
    tree = cKDTree(scene_cloud.points)
    pts = scene_cloud.points

    def collides(g: Grasp) -> bool:
        idx = tree.query_ball_point(g.center, radius)
        if not idx:
            return False
        q = world_to_grasp(grasp_frame(g), pts[idx])
        return _collides(q, volume)

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            flags = list(pool.map(collides, candidates))
    else:
        flags = [collides(g) for g in candidates]
    return [g for g, hit in zip(candidates, flags) if not hit]


def closing_region_points(
    cloud: PointCloud,
    g: Grasp,
    s: GripperParams,
    keep: int = 64,
    seed: int = 0,
) -> tuple[np.ndarray, bool]:
    """Grasp-frame coordinates of the points inside the closing region.

    Resized to exactly `keep` rows with the same subsample/pad rule as
    ball_query; returns (points (keep, 3), padded flag). Raises
    EmptyRegionError when the closing region is empty.
    """
    if keep < 1:
        raise ValueError("keep must be >= 1")
    if len(cloud) == 0:
        raise EmptyRegionError("empty cloud has no closing-region points")
    q = world_to_grasp(grasp_frame(g), cloud.points)
    inside = np.flatnonzero(gripper_volume(s).closing.contains(q))
    if inside.size == 0:
        raise EmptyRegionError("no points inside the gripper closing region")
    rng = np.random.default_rng(seed)
    if inside.size > keep:
        return q[rng.choice(inside, size=keep, replace=False)], False
    if inside.size < keep:
        pad = rng.choice(inside, size=keep - inside.size, replace=True)
        return q[np.concatenate([inside, pad])], True
    return q[inside], False
