"""Point grasp confidence: tanh-saturated density of nearby grasp centers.

Each point accumulates one hat-kernel contribution per grasp whose center
lies within the distance threshold, sigma_g = 1 - dist/d_th, and the sum
is squashed through tanh. A point with no grasp center within d_th scores
exactly 0; the score is always < 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import Grasp, PointCloud

__all__ = ["ConfidenceField", "point_confidence", "select_positive_points"]


@dataclass(frozen=True, eq=False)
class ConfidenceField:
    """Per-point grasp confidence aligned with a cloud by index."""

    values: np.ndarray
    d_th: float
    gripper_width: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("confidence values must lie in [0, 1)")
        # a saturated tanh serialized at 9 digits reads back as exactly 1.0;
        # fold it onto the open interval
        object.__setattr__(self, "values", np.minimum(v, np.nextafter(1.0, 0.0)))
        if not self.d_th > 0.0:
            raise ValueError("d_th must be positive")

    def __len__(self) -> int:
        return self.values.shape[0]


def point_confidence(
    cloud: PointCloud,
    grasps: list[Grasp],
    d_th: float = 0.01,
    gripper_width: float = 0.0,
) -> ConfidenceField:
    """tanh of summed hat-kernel contributions from grasp centers within d_th.

    Per-width fields come from running this on that width's collision-free
    grasp list; the field itself depends only on the centers.
    """
    if d_th <= 0.0:
        raise ValueError("d_th must be positive")
    n = len(cloud)
    if n == 0 or not grasps:
        return ConfidenceField(np.zeros(n), d_th, gripper_width)
    centers = np.stack([g.center for g in grasps])
    tree = cKDTree(centers)
    sums = np.zeros(n)
    neighbors = tree.query_ball_point(cloud.points, d_th)
    for i, idx in enumerate(neighbors):
        if idx:
            d = np.linalg.norm(centers[idx] - cloud.points[i], axis=1)
            sums[i] = np.sum(1.0 - d / d_th)
    return ConfidenceField(np.tanh(sums), d_th, gripper_width)


def select_positive_points(field: ConfidenceField, k1: int) -> np.ndarray:
    """Indices of the k1 highest-confidence points, ties toward lower index."""
    n = len(field)
    if not 1 <= k1 <= n:
        raise ValueError(f"k1={k1} must be in [1, {n}]")
    order = np.argsort(-field.values, kind="stable")
    return order[:k1]
