"""Core geometric types and the canonical grasp coordinate frame.

Conventions used throughout the package:
  * lengths in meters, angles in radians
  * world +Z is "up"; the operation platform lies in the world X-Y plane
  * a grasp is (center, orientation, theta): `orientation` is the unit
    closing axis of the jaws (the grasp frame Y axis) and `theta` in
    [-pi/2, pi/2] is the approach angle (theta = pi/2 approaches straight
    down along world -Z)

Grasp frame construction:
  Y_G = orientation; X' = normalize((r_y, -r_x, 0)) lies in the ground
  plane perpendicular to Y_G; X_G (the approach direction) is X' rotated
  about Y_G by theta (right-handed); Z_G = X_G x Y_G.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-6          # how far off unit length an input vector may be
THETA_MAX = math.pi / 2

__all__ = [
    "Grasp",
    "GripperParams",
    "PointCloud",
    "GraspFrame",
    "grasp_frame",
    "world_to_grasp",
    "grasp_to_world",
    "vertical_score",
    "rotate_about_axis",
    "UNIT_TOL",
    "THETA_MAX",
]


def _as_vec3(v, name: str = "vector") -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite components: {a}")
    return a


def _unit(v: np.ndarray, name: str = "vector") -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        raise ValueError(f"{name} has near-zero length")
    return v / n


@dataclass(frozen=True, eq=False)
class Grasp:
    """A parallel-jaw grasp: center (m), unit closing axis, approach angle (rad)."""

    center: np.ndarray
    orientation: np.ndarray
    theta: float

    def __post_init__(self):
        c = _as_vec3(self.center, "center")
        r = _as_vec3(self.orientation, "orientation")
        n = float(np.linalg.norm(r))
        if abs(n - 1.0) > UNIT_TOL:
            raise ValueError(f"orientation norm {n:.9f} not within {UNIT_TOL} of 1")
        t = float(self.theta)
        if not math.isfinite(t):
            raise ValueError("theta is not finite")
        # tolerance covers 9-significant-digit serialization of +-pi/2
        if abs(t) > THETA_MAX + UNIT_TOL:
            raise ValueError(f"theta {t} outside [-pi/2, pi/2]")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "orientation", r / n)
        object.__setattr__(self, "theta", min(max(t, -THETA_MAX), THETA_MAX))


@dataclass(frozen=True)
class GripperParams:
    """Simplified parallel-jaw geometry, all in meters.

    depth: inner depth of the jaws (extent along the approach axis)
    width: inner opening between the fingers (max graspable object size)
    height: finger height (extent along the frame Z axis)
    thickness: finger / back-plate thickness
    """

    depth: float
    width: float
    height: float
    thickness: float

    def __post_init__(self):
        for name in ("depth", "width", "height", "thickness"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"gripper {name} must be strictly positive, got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """N points (m) with optional unit normals and optional RGB colors in [0,1]."""

    points: np.ndarray
    normals: np.ndarray | None = None
    colors: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite values")
        object.__setattr__(self, "points", pts)
        for name in ("normals", "colors"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            if arr.shape != pts.shape:
                raise ValueError(f"{name} shape {arr.shape} does not match points {pts.shape}")
            object.__setattr__(self, name, arr)
        if self.normals is not None:
            norms = np.linalg.norm(self.normals, axis=1)
            if np.any(np.abs(norms - 1.0) > UNIT_TOL):
                raise ValueError("normals must be unit length within 1e-6")
        if self.colors is not None and (np.any(self.colors < 0.0) or np.any(self.colors > 1.0)):
            raise ValueError("colors must lie in [0, 1]")

    def __len__(self) -> int:
        return self.points.shape[0]

    def with_normals(self, normals: np.ndarray) -> "PointCloud":
        return PointCloud(self.points, normals, self.colors)


@dataclass(frozen=True, eq=False)
class GraspFrame:
    """Rotation with columns (X_G, Y_G, Z_G) plus origin; maps grasp -> world."""

    rotation: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        o = _as_vec3(self.origin, "origin")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "origin", o)

    @property
    def x_axis(self) -> np.ndarray:
        return self.rotation[:, 0]

    @property
    def y_axis(self) -> np.ndarray:
        return self.rotation[:, 1]

    @property
    def z_axis(self) -> np.ndarray:
        return self.rotation[:, 2]


def rotate_about_axis(v: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    """Right-handed Rodrigues rotation of v about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    v = np.asarray(v, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * float(np.dot(axis, v)) * (1.0 - c)


def grasp_frame(g: Grasp) -> GraspFrame:
    """Build the canonical frame of a grasp.

    The in-ground-plane reference X' = normalize((r_y, -r_x, 0)) is rotated
    about Y_G = orientation by theta to produce the approach axis X_G.
    When the orientation is (anti)parallel to world Z the reference is
    degenerate; X' falls back to (1, 0, 0) with a warning.
    """
    r = g.orientation
    if abs(r[0]) < 1e-9 and abs(r[1]) < 1e-9:
        warnings.warn(
            "grasp orientation is parallel to world Z; using X' = (1, 0, 0)",
            RuntimeWarning,
            stacklevel=2,
        )
        x_ref = np.array([1.0, 0.0, 0.0])
    else:
        x_ref = _unit(np.array([r[1], -r[0], 0.0]), "X'")
    x_axis = rotate_about_axis(x_ref, r, g.theta)
    z_axis = np.cross(x_axis, r)
    return GraspFrame(np.column_stack([x_axis, r, z_axis]), g.center)


def world_to_grasp(frame: GraspFrame, points: np.ndarray) -> np.ndarray:
    """Map world coordinates into the grasp frame: R^T (p - origin).

    Accepts a single (3,) point or an (N, 3) batch.
    """
    p = np.asarray(points, dtype=float)
    return (p - frame.origin) @ frame.rotation


def grasp_to_world(frame: GraspFrame, points: np.ndarray) -> np.ndarray:
    """Inverse of world_to_grasp: R p + origin."""
    p = np.asarray(points, dtype=float)
    return p @ frame.rotation.T + frame.origin


def vertical_score(g: Grasp | float) -> float:
    """Verticality of a grasp in [0, 1]: 0.5 + theta / pi.

    1 means approaching straight down (theta = pi/2), 0 means parallel to
    the platform plane (theta = -pi/2). Accepts a Grasp or a bare theta.
    """
    theta = g.theta if isinstance(g, Grasp) else float(g)
    if abs(theta) > THETA_MAX + 1e-12:
        raise ValueError(f"theta {theta} outside [-pi/2, pi/2]")
    return 0.5 + theta / math.pi
