"""Ground-truth construction and registration-level losses (forward only).

These are diagnostics and test oracles, not training signals: they let
experiments assert that better registration reduces the correspondence and
transformation losses on synthetic data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geom import BBox3D, PointCloud, RigidTransform, rotation_z

__all__ = [
    "InlierLabels",
    "gt_transform",
    "inlier_labels",
    "bce_loss",
    "corr_loss",
    "trans_loss",
]

_PRED_CLAMP = 1e-7


@dataclass
class InlierLabels:
    """Binary inlier labels for the template and search clouds."""

    template: np.ndarray
    search: np.ndarray


def gt_transform(b1: BBox3D, b2: BBox3D) -> RigidTransform:
    """Ground-truth motion between two boxes given in a shared canonical frame.

    Rotation is the heading delta about z; translation is the center delta.
    The rotation pivot is the canonical-frame origin (the previous box
    center), matching how clouds are canonicalized before registration.
    """
    return RigidTransform(rotation_z(b2.heading - b1.heading), b2.center - b1.center)


def inlier_labels(
    x: PointCloud, y: PointCloud, t_star: RigidTransform, tau: float
) -> InlierLabels:
    """Label points whose ground-truth-moved position is strictly within tau
    of the opposite cloud."""
    if tau <= 0:
        raise ValueError("tau must be > 0")
    if len(x) == 0 or len(y) == 0:
        return InlierLabels(np.zeros(len(x), dtype=int), np.zeros(len(y), dtype=int))
    moved = t_star.apply_points(x.points)
    d_x, _ = cKDTree(y.points).query(moved, k=1)
    d_y, _ = cKDTree(moved).query(y.points, k=1)
    return InlierLabels((d_x < tau).astype(int), (d_y < tau).astype(int))


def bce_loss(pred: np.ndarray, labels: np.ndarray) -> float:
    """Sum of binary cross-entropies; predictions are clamped away from {0, 1}."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if pred.shape != labels.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {labels.shape}")
    p = np.clip(pred, _PRED_CLAMP, 1.0 - _PRED_CLAMP)
    return float(-(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)).sum())


def corr_loss(
    kept_template_points: np.ndarray, t_star: RigidTransform, soft_corr: np.ndarray
) -> float:
    """Sum of l2 distances between ground-truth-moved kept template points and
    their soft correspondences."""
    kept = np.asarray(kept_template_points, dtype=np.float64).reshape(-1, 3)
    soft = np.asarray(soft_corr, dtype=np.float64).reshape(-1, 3)
    if len(kept) != len(soft):
        raise ValueError(f"length mismatch: {len(kept)} vs {len(soft)}")
    return float(np.linalg.norm(t_star.apply_points(kept) - soft, axis=1).sum())


def trans_loss(t_hat: RigidTransform, t_star: RigidTransform) -> float:
    """||R_hatᵀ R* - I||_F^2 + ||t_hat - t*||_2^2."""
    r_term = np.linalg.norm(t_hat.rotation.T @ t_star.rotation - np.eye(3)) ** 2
    t_term = np.linalg.norm(t_hat.translation - t_star.translation) ** 2
    return float(r_term + t_term)
