"""Shared helpers: synthetic clouds and hand-rolled geometry oracles.

The oracle functions deliberately reimplement frame and box math with
plain scalar arithmetic so library bugs cannot hide in both routes.
"""

import math

import numpy as np
import pytest

from grasplab import PointCloud


def random_sphere_cloud(radius: float, n: int, seed: int = 0, center=(0.0, 0.0, 0.0)) -> PointCloud:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return PointCloud(v * radius + np.asarray(center, dtype=float))


def grid_sphere_cloud(radius: float, n_lat: int = 60, n_lon: int = 60, pole_axis=(0.0, 1.0, 0.0)) -> PointCloud:
    """Lat-long sphere whose poles lie exactly on pole_axis (included as points)."""
    axis = np.asarray(pole_axis, dtype=float)
    axis /= np.linalg.norm(axis)
    ref = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
    u = np.cross(axis, ref)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    pts = [axis * radius, -axis * radius]
    for i in range(1, n_lat):
        phi = math.pi * i / n_lat
        for j in range(n_lon):
            lam = 2.0 * math.pi * j / n_lon
            p = (
                math.cos(phi) * axis
                + math.sin(phi) * (math.cos(lam) * u + math.sin(lam) * v)
            ) * radius
            pts.append(p)
    return PointCloud(np.asarray(pts))


def with_radial_normals(cloud: PointCloud, center=(0.0, 0.0, 0.0)) -> PointCloud:
    d = cloud.points - np.asarray(center, dtype=float)
    return cloud.with_normals(d / np.linalg.norm(d, axis=1, keepdims=True))


# ---------------------------------------------------------------------------
# Hand-rolled oracles
# ---------------------------------------------------------------------------

def oracle_frame(center, orientation, theta):
    """Grasp frame via explicit scalar Rodrigues math (independent route)."""
    rx, ry, rz = (float(v) for v in orientation)
    if abs(rx) < 1e-9 and abs(ry) < 1e-9:
        xr = (1.0, 0.0, 0.0)
    else:
        n = math.hypot(ry, -rx)
        xr = (ry / n, -rx / n, 0.0)
    c, s = math.cos(theta), math.sin(theta)
    kdotv = rx * xr[0] + ry * xr[1] + rz * xr[2]
    cross = (ry * xr[2] - rz * xr[1], rz * xr[0] - rx * xr[2], rx * xr[1] - ry * xr[0])
    x = tuple(xr[i] * c + cross[i] * s + (rx, ry, rz)[i] * kdotv * (1.0 - c) for i in range(3))
    y = (rx, ry, rz)
    z = (x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0])
    return x, y, z, tuple(float(v) for v in center)


def oracle_collision(points, center, orientation, theta, depth, width, height, thickness, tol=1e-12):
    """Naive per-point point-in-box scan (python floats only)."""
    x, y, z, o = oracle_frame(center, orientation, theta)
    d2, w2, h2 = depth / 2.0, width / 2.0, height / 2.0
    boxes = [
        ((-d2, w2, -h2), (d2, w2 + thickness, h2)),          # +Y finger
        ((-d2, -w2 - thickness, -h2), (d2, -w2, h2)),        # -Y finger
        ((-d2 - thickness, -w2 - thickness, -h2), (-d2, w2 + thickness, h2)),  # back
    ]
    for p in points:
        dp = (p[0] - o[0], p[1] - o[1], p[2] - o[2])
        q = tuple(dp[0] * a[0] + dp[1] * a[1] + dp[2] * a[2] for a in (x, y, z))
        for lo, hi in boxes:
            if all(lo[i] + tol < q[i] < hi[i] - tol for i in range(3)):
                return True
    return False


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
