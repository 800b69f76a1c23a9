"""Target-specific feature aggregation and box localization from the match map.

The global/local/fused embeddings transfer template information into every
search point, guided by the refined matching matrix. Localization combines
the registration transform with a score-weighted residual displacement read
off the matching matrix, then maps the result back to the world frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .feat import Mlp, seeded_mlp
from .geom import BBox3D, PointCloud, RigidTransform, heading_from_rotation, rotation_z, wrap_angle
from .reg import RegistrationResult

__all__ = [
    "AggregationWeights",
    "TargetFeature",
    "LocalizationOutput",
    "global_embedding",
    "local_embedding",
    "fuse",
    "target_feature",
    "localize",
]

_MAXPOOL_CHUNK = 128  # search columns per chunk; bounds the (n, chunk, d) buffer


@dataclass
class AggregationWeights:
    """MLPs of the aggregation stage, all sized for feature dimension ``dim``."""

    global_mlp: Mlp  # d -> d
    local_mlp: Mlp  # (2d + 4) -> d
    fuse_mlp: Mlp  # 2d -> d

    @staticmethod
    def seeded(dim: int, seed) -> "AggregationWeights":
        rng = np.random.default_rng(seed)
        return AggregationWeights(
            global_mlp=seeded_mlp([dim, dim, dim], rng),
            local_mlp=seeded_mlp([2 * dim + 4, dim, dim], rng),
            fuse_mlp=seeded_mlp([2 * dim, dim, dim], rng),
        )


@dataclass
class TargetFeature:
    """Per-search-point fused target embedding (|Y| x d)."""

    rows: np.ndarray


@dataclass
class LocalizationOutput:
    bbox: BBox3D  # world frame, size equal to the tracked object's size
    confidence: float
    used_registration: bool


def global_embedding(a_reg: np.ndarray, phi_x: np.ndarray, mlp: Mlp) -> np.ndarray:
    """Per-search-point MLP(elementwise-max over i of a_reg[i,j] * phi_x[i])."""
    a_reg = np.asarray(a_reg, dtype=np.float64)
    phi_x = np.asarray(phi_x, dtype=np.float64)
    if a_reg.shape[0] != phi_x.shape[0]:
        raise ValueError(f"rows of a_reg ({a_reg.shape[0]}) must match phi_x ({phi_x.shape[0]})")
    n, m = a_reg.shape
    pooled = np.empty((m, phi_x.shape[1]))
    for start in range(0, m, _MAXPOOL_CHUNK):
        cols = a_reg[:, start : start + _MAXPOOL_CHUNK]  # (n, c)
        scaled = cols[:, :, None] * phi_x[:, None, :]  # (n, c, d)
        pooled[start : start + _MAXPOOL_CHUNK] = scaled.max(axis=0)
    return mlp.apply(pooled)


def local_embedding(
    a_reg: np.ndarray,
    phi_x: np.ndarray,
    xbar_points: np.ndarray,
    phi_y: np.ndarray,
    mlp: Mlp,
) -> np.ndarray:
    """Per-search-point MLP over [own feature, best score, best template feature, its coords].

    The best template index is the argmax of the column of ``a_reg``; ties go
    to the lowest index.
    """
    a_reg = np.asarray(a_reg, dtype=np.float64)
    best = a_reg.argmax(axis=0)  # argmax takes the first maximum
    rows = np.concatenate(
        [
            np.asarray(phi_y, dtype=np.float64),
            a_reg[best, np.arange(a_reg.shape[1])][:, None],
            np.asarray(phi_x, dtype=np.float64)[best],
            np.asarray(xbar_points, dtype=np.float64)[best],
        ],
        axis=1,
    )
    return mlp.apply(rows)


def fuse(global_rows: np.ndarray, local_rows: np.ndarray, mlp: Mlp) -> TargetFeature:
    """Fused per-search-point embedding MLP([global_row, local_row])."""
    global_rows = np.asarray(global_rows, dtype=np.float64)
    local_rows = np.asarray(local_rows, dtype=np.float64)
    if global_rows.shape[0] != local_rows.shape[0]:
        raise ValueError(
            f"row count mismatch: {global_rows.shape[0]} vs {local_rows.shape[0]}"
        )
    return TargetFeature(mlp.apply(np.concatenate([global_rows, local_rows], axis=1)))


def target_feature(
    a_reg: np.ndarray,
    phi_x: np.ndarray,
    xbar_points: np.ndarray,
    phi_y: np.ndarray,
    w: AggregationWeights,
) -> TargetFeature:
    """Global + local + fused aggregation in one call."""
    g = global_embedding(a_reg, phi_x, w.global_mlp)
    l = local_embedding(a_reg, phi_x, xbar_points, phi_y, w.local_mlp)
    return fuse(g, l, w.fuse_mlp)


def localize(
    a_reg: np.ndarray,
    xbar: PointCloud,
    y: PointCloud,
    prev_box: BBox3D,
    reg: RegistrationResult,
    *,
    registration_only: bool = False,
) -> LocalizationOutput:
    """Predict the next world-frame box from the match map and the registration.

    All point inputs live in the canonical frame of ``prev_box``. The box
    center starts at the registered image of the canonical origin and is
    corrected by a score-weighted mean residual between matched registered
    template points and search points (median-gated to suppress background).
    With ``registration_only`` the residual correction is skipped.
    """
    a_reg = np.asarray(a_reg, dtype=np.float64)
    n, m = a_reg.shape
    if n != len(xbar) or m != len(y):
        raise ValueError(
            f"match map {a_reg.shape} does not fit clouds ({len(xbar)}, {len(y)})"
        )
    used_registration = not reg.degenerate
    c_reg = reg.transform.translation if used_registration else np.zeros(3)
    # project the estimated rotation onto its yaw component; boxes only yaw
    heading_inc = (
        heading_from_rotation(reg.transform.rotation, off_axis_tol=math.inf)
        if used_registration
        else 0.0
    )

    scores = a_reg.max(axis=0)
    best = a_reg.argmax(axis=0)
    if scores.max() <= 0.0:
        center_canonical = c_reg
        confidence = 0.0
    else:
        selected = scores >= np.median(scores)
        mass = scores[selected].sum()
        if registration_only or mass <= 0.0:
            delta = np.zeros(3)
        else:
            residual = y.points[selected] - xbar.points[best[selected]]
            delta = (scores[selected][:, None] * residual).sum(axis=0) / mass
        center_canonical = c_reg + delta
        top = np.sort(scores)[::-1][: max(1, math.ceil(m / 4))]
        confidence = float(np.clip(top.mean(), 0.0, 1.0))

    world_center = rotation_z(prev_box.heading) @ center_canonical + prev_box.center
    world_heading = wrap_angle(prev_box.heading + heading_inc)
    return LocalizationOutput(
        bbox=BBox3D(world_center, prev_box.size, world_heading),
        confidence=confidence,
        used_registration=used_registration,
    )
