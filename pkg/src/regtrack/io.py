"""ASCII point-cloud file formats: XYZ read/write and PLY (vertex-only) export.

XYZ files hold one ``x y z`` triple per line; blank lines and ``#`` comment
lines are ignored on read. Floats are written with 9 decimal places so output
is byte-stable across runs.
"""

from __future__ import annotations

import numpy as np

from .geom import PointCloud

__all__ = ["read_xyz", "write_xyz", "write_ply"]

FLOAT_FMT = "%.9f"


def read_xyz(path) -> PointCloud:
    """Read an ASCII XYZ file into a point cloud."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: unparsable coordinate") from exc
    return PointCloud(np.asarray(rows, dtype=np.float64).reshape(-1, 3))


def write_xyz(path, cloud: PointCloud) -> None:
    """Write a point cloud as one ``x y z`` line per point."""
    with open(path, "w", encoding="ascii") as fh:
        for p in cloud.points:
            fh.write(f"{FLOAT_FMT % p[0]} {FLOAT_FMT % p[1]} {FLOAT_FMT % p[2]}\n")


def write_ply(path, cloud: PointCloud) -> None:
    """Write a vertex-only ASCII PLY file (for external viewers)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(
            "ply\nformat ascii 1.0\n"
            f"element vertex {len(cloud)}\n"
            "property float x\nproperty float y\nproperty float z\n"
            "end_header\n"
        )
        for p in cloud.points:
            fh.write(f"{FLOAT_FMT % p[0]} {FLOAT_FMT % p[1]} {FLOAT_FMT % p[2]}\n")
