"""Core 3D geometry: rigid transforms, yaw-oriented boxes, IoU, cropping, resampling.

Conventions used throughout the package:

* a point is a length-3 float array ``(x, y, z)`` in meters,
* a point cloud is an ``(n, 3)`` float64 array wrapped in :class:`PointCloud`,
* boxes rotate about the z axis only; the box x-axis is the heading direction,
* the *canonical frame* of a box has its origin at the box center and its
  x-axis along the box heading.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PointCloud",
    "RigidTransform",
    "BBox3D",
    "apply_transform",
    "compose",
    "invert",
    "rotation_z",
    "heading_from_rotation",
    "rotation_angle_between",
    "wrap_angle",
    "bbox_iou",
    "crop",
    "canonicalize",
    "decanonicalize",
    "box_to_canonical",
    "box_to_world",
    "resample",
]

_ORTHO_TOL = 1e-9


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(float(theta), math.tau)
    if a <= -math.pi:
        a += math.tau
    return a


@dataclass
class PointCloud:
    """An ordered set of 3D points with optional per-point feature rows."""

    points: np.ndarray
    features: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        self.points = np.ascontiguousarray(pts)
        if self.features is not None:
            feats = np.asarray(self.features, dtype=np.float64)
            if feats.ndim != 2 or feats.shape[0] != len(pts):
                raise ValueError(
                    f"features must have one row per point, got {feats.shape} "
                    f"for {len(pts)} points"
                )
            if not np.all(np.isfinite(feats)):
                raise ValueError("features must be finite")
            self.features = np.ascontiguousarray(feats)

    def __len__(self) -> int:
        return self.points.shape[0]

    def select(self, index) -> "PointCloud":
        """New cloud holding the rows picked by ``index`` (mask or indices)."""
        feats = self.features[index] if self.features is not None else None
        return PointCloud(self.points[index], feats)


@dataclass
class RigidTransform:
    """Rotation (3x3, SO(3)) plus translation (meters)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(t)):
            raise ValueError("transform entries must be finite")
        if np.abs(r.T @ r - np.eye(3)).max() > _ORTHO_TOL:
            raise ValueError("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise ValueError("rotation determinant is not +1 within 1e-9")
        self.rotation = np.ascontiguousarray(r)
        self.translation = np.ascontiguousarray(t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def apply_points(self, pts: np.ndarray) -> np.ndarray:
        """Apply to an (n, 3) array of points."""
        pts = np.asarray(pts, dtype=np.float64)
        return pts @ self.rotation.T + self.translation


@dataclass
class BBox3D:
    """7-parameter box: center (x,y,z), size (l,w,h), heading about z.

    The heading is normalized to (-pi, pi] at construction.
    """

    center: np.ndarray
    size: tuple[float, float, float]
    heading: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(c)):
            raise ValueError("center must be finite")
        size = tuple(float(s) for s in self.size)
        if len(size) != 3 or any(s <= 0 or not math.isfinite(s) for s in size):
            raise ValueError(f"size (l, w, h) must be positive, got {size}")
        self.center = c
        self.size = size
        self.heading = wrap_angle(self.heading)

    @property
    def volume(self) -> float:
        l, w, h = self.size
        return l * w * h

    def bev_corners(self, enlarge_m: float = 0.0) -> np.ndarray:
        """(4, 2) CCW corner polygon of the (optionally enlarged) box in BEV."""
        l, w, _ = self.size
        hl, hw = (l + enlarge_m) / 2.0, (w + enlarge_m) / 2.0
        base = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        c, s = math.cos(self.heading), math.sin(self.heading)
        rot = np.array([[c, -s], [s, c]])
        return base @ rot.T + self.center[:2]


def rotation_z(theta: float) -> np.ndarray:
    """3x3 rotation matrix about the z axis."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def heading_from_rotation(rotation: np.ndarray, off_axis_tol: float = 1e-6) -> float:
    """Heading angle of a z-rotation matrix, in (-pi, pi].

    If the matrix has a significant off-z component the z-projected angle is
    still returned, but a RuntimeWarning flags the caller.
    """
    r = np.asarray(rotation, dtype=np.float64)
    off = max(
        abs(r[2, 2] - 1.0), abs(r[0, 2]), abs(r[1, 2]), abs(r[2, 0]), abs(r[2, 1])
    )
    if off > off_axis_tol:
        warnings.warn(
            f"rotation has off-z component (max deviation {off:.3g}); "
            "returning the z-projected angle",
            RuntimeWarning,
            stacklevel=2,
        )
    return math.atan2(r[1, 0], r[0, 0])


def rotation_angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Geodesic angle (radians) between two rotation matrices."""
    cos = (np.trace(np.asarray(a).T @ np.asarray(b)) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, cos)))


def apply_transform(t: RigidTransform, c: PointCloud) -> PointCloud:
    """Rigidly move every point; features are carried through unchanged."""
    return PointCloud(t.apply_points(c.points), c.features)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform equivalent to applying ``b`` first, then ``a``."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(t: RigidTransform) -> RigidTransform:
    """Inverse transform: compose(t, invert(t)) is the identity."""
    rt = t.rotation.T
    return RigidTransform(rt, -(rt @ t.translation))


# ----------------------------------------------------------------------------
# Oriented-box IoU (z-rotated boxes): exact BEV polygon clipping x z overlap.


def _clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of convex CCW polygon ``subject`` by ``clip``."""
    output = list(subject)
    m = len(clip)
    for i in range(m):
        a = clip[i]
        b = clip[(i + 1) % m]
        edge = b - a
        if not output:
            break
        polygon, output = output, []
        prev = polygon[-1]
        prev_in = edge[0] * (prev[1] - a[1]) - edge[1] * (prev[0] - a[0]) >= 0.0
        for cur in polygon:
            cur_in = edge[0] * (cur[1] - a[1]) - edge[1] * (cur[0] - a[0]) >= 0.0
            if cur_in != prev_in:
                # intersection of segment prev->cur with the clip edge line
                d = cur - prev
                denom = edge[0] * d[1] - edge[1] * d[0]
                s = (edge[0] * (a[1] - prev[1]) - edge[1] * (a[0] - prev[0])) / denom
                output.append(prev + s * d)
            if cur_in:
                output.append(cur)
            prev, prev_in = cur, cur_in
    return np.asarray(output).reshape(-1, 2)


def _polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def bbox_iou(a: BBox3D, b: BBox3D) -> float:
    """Exact volumetric IoU of two z-rotated boxes, in [0, 1]."""
    za0, za1 = a.center[2] - a.size[2] / 2, a.center[2] + a.size[2] / 2
    zb0, zb1 = b.center[2] - b.size[2] / 2, b.center[2] + b.size[2] / 2
    z_overlap = max(0.0, min(za1, zb1) - max(za0, zb0))
    if z_overlap == 0.0:
        return 0.0
    inter_bev = _polygon_area(_clip_convex(a.bev_corners(), b.bev_corners()))
    inter = inter_bev * z_overlap
    union = a.volume + b.volume - inter
    if union <= 0.0:
        return 0.0
    return float(min(1.0, max(0.0, inter / union)))


# ----------------------------------------------------------------------------
# Box cropping, canonical frames, resampling.


def _canonical_coords(points: np.ndarray, box: BBox3D) -> np.ndarray:
    return (points - box.center) @ rotation_z(box.heading)  # R(-h) = R(h).T


def crop(c: PointCloud, box: BBox3D, enlarge_m: float = 0.0) -> PointCloud:
    """Points inside the box after adding ``enlarge_m`` to each of l, w, h.

    Membership is closed (boundary points included); point order is preserved.
    An empty result is legal and returned as an empty cloud.
    """
    if enlarge_m < 0:
        raise ValueError("enlarge_m must be >= 0")
    if len(c) == 0:
        return PointCloud(np.zeros((0, 3)))
    local = _canonical_coords(c.points, box)
    half = (np.asarray(box.size) + enlarge_m) / 2.0
    mask = np.all(np.abs(local) <= half, axis=1)
    return c.select(mask)


def canonicalize(c: PointCloud, box: BBox3D) -> PointCloud:
    """Express a cloud in the frame centered at ``box`` with x along its heading."""
    return PointCloud(_canonical_coords(c.points, box), c.features)


def decanonicalize(c: PointCloud, box: BBox3D) -> PointCloud:
    """Inverse of :func:`canonicalize`."""
    world = c.points @ rotation_z(box.heading).T + box.center
    return PointCloud(world, c.features)


def box_to_canonical(b: BBox3D, frame_box: BBox3D) -> BBox3D:
    """Express a box in the canonical frame of ``frame_box``."""
    center = rotation_z(frame_box.heading).T @ (b.center - frame_box.center)
    return BBox3D(center, b.size, b.heading - frame_box.heading)


def box_to_world(b: BBox3D, frame_box: BBox3D) -> BBox3D:
    """Inverse of :func:`box_to_canonical`."""
    center = rotation_z(frame_box.heading) @ b.center + frame_box.center
    return BBox3D(center, b.size, b.heading + frame_box.heading)


def resample(c: PointCloud, n: int, seed) -> PointCloud:
    """Exactly ``n`` points, sampled without replacement when possible.

    Sampling is without replacement when the cloud has at least ``n`` points
    and with replacement otherwise; deterministic for a fixed seed.
    """
    if len(c) == 0:
        raise ValueError("empty cloud")
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(c), size=n, replace=len(c) < n)
    return c.select(idx)
