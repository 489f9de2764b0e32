"""Regenerate the bundled 3-D stand-in point cloud (a quadruped built from primitives)."""

import numpy as np
from pathlib import Path

rng = np.random.default_rng(20240601)


def ellipsoid(m, c, ax):
    v = rng.standard_normal((m, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return c + v * ax


def tube(m, a, b, rad):
    t = rng.uniform(0, 1, m)[:, None]
    ang = rng.uniform(0, 2 * np.pi, m)
    axis = (b - a) / np.linalg.norm(b - a)
    u = np.cross(axis, [0.0, 0.0, 1.0] if abs(axis[2]) < 0.9 else [1.0, 0.0, 0.0])
    u /= np.linalg.norm(u)
    w = np.cross(axis, u)
    r = rad(t[:, 0]) if callable(rad) else rad
    return a + t * (b - a) + (np.cos(ang) * r)[:, None] * u + (np.sin(ang) * r)[:, None] * w


parts = [
    ellipsoid(2400, np.array([0.0, 0.0, 1.6]), np.array([1.5, 0.8, 0.75])),  # body
    ellipsoid(700, np.array([1.75, 0.0, 2.0]), np.array([0.5, 0.45, 0.5])),  # head
]
for x in (-0.9, 0.9):
    for y in (-0.45, 0.45):
        parts.append(tube(350, np.array([x, y, 1.2]), np.array([x, y, 0.0]), 0.22))  # legs
trunk = tube(450, np.array([2.15, 0.0, 1.9]), np.array([2.5, 0.0, 0.4]), lambda t: 0.16 - 0.08 * t)
parts.append(trunk)
for y in (-0.25, 0.25):
    parts.append(tube(150, np.array([2.0, y, 1.7]), np.array([2.7, 1.6 * y, 1.3]), 0.05))  # tusks
cloud = np.vstack(parts)
out = Path(__file__).resolve().parents[1] / "src" / "metaviz" / "data" / "pointcloud_standin.txt"
with open(out, "w") as fh:
    fh.write("# synthetic quadruped stand-in for a 3-D manifold point cloud\n")
    fh.write(f"# {cloud.shape[0]} points, generated by tools/make_pointcloud.py\n")
    np.savetxt(fh, cloud, fmt="%.6f")
print(out, cloud.shape)
