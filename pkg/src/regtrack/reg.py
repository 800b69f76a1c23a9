"""Rigid registration of template to search area, driven by the gated features.

Pipeline: enhanced features for both clouds -> per-point inlier scores ->
keep the highest-scoring fraction on each side -> soft correspondences from
feature similarity -> score-weighted SVD for the rigid transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .feat import GateConfig, Mlp, TsnonlocalWeights, seeded_mlp, tsnonlocal
from .geom import PointCloud, RigidTransform

__all__ = [
    "RegisterConfig",
    "RegistrationResult",
    "inlier_scores",
    "select_topk",
    "select_by_threshold",
    "soft_correspondence",
    "weighted_svd",
    "register",
]


@dataclass
class RegisterConfig:
    """Parameters of one registration pass (defaults follow the tracker defaults)."""

    iterations: int = 12
    dim: int = 128
    gate: GateConfig = field(default_factory=GateConfig)
    inlier_fraction: float = 0.5
    inlier_backend: str = "mnn"
    tau: float = 0.1
    k_neighbors: int = 16
    weight_seed: int = 0
    # Optional alternative to the top-k fraction: absolute score thresholds
    # (template, search). When set, points at or above the threshold are kept.
    inlier_thresholds: tuple[float, float] | None = None
    weights: TsnonlocalWeights | None = None
    inlier_mlp: Mlp | None = None

    def resolved_weights(self) -> TsnonlocalWeights:
        if self.weights is None:
            self.weights = TsnonlocalWeights.seeded(self.dim, self.iterations, self.weight_seed)
        return self.weights

    def resolved_inlier_mlp(self) -> Mlp:
        if self.inlier_mlp is None:
            rng = np.random.default_rng([self.weight_seed, 0xC1A55])
            self.inlier_mlp = seeded_mlp([self.dim, self.dim, self.dim, 1], rng)
        return self.inlier_mlp


@dataclass
class RegistrationResult:
    transform: RigidTransform
    template_scores: np.ndarray
    search_scores: np.ndarray
    kept_template_indices: np.ndarray
    kept_search_indices: np.ndarray
    soft_correspondences: np.ndarray  # (n_kept_template, 3)
    degenerate: bool = False


def inlier_scores(
    features: np.ndarray,
    backend: str = "mnn",
    *,
    own_points: np.ndarray | None = None,
    other_points: np.ndarray | None = None,
    tau: float = 0.1,
    mlp: Mlp | None = None,
) -> np.ndarray:
    """Per-point inlier confidence in [0, 1].

    ``mnn`` (default, training-free): exp(-d^2 / tau^2) with d the distance
    from each point to its nearest neighbor in the opposite cloud. ``mlp``:
    a loadable 3-layer MLP over the features, squashed by a sigmoid.
    """
    if backend == "mnn":
        if own_points is None or other_points is None:
            raise ValueError("mnn backend needs own_points and other_points")
        own = np.asarray(own_points, dtype=np.float64).reshape(-1, 3)
        other = np.asarray(other_points, dtype=np.float64).reshape(-1, 3)
        if len(own) == 0:
            raise ValueError("empty cloud")
        if len(other) == 0:
            return np.zeros(len(own))
        d, _ = cKDTree(other).query(own, k=1)
        return np.exp(-(d**2) / tau**2)
    if backend == "mlp":
        if mlp is None:
            raise ValueError("mlp backend needs an Mlp")
        features = np.asarray(features, dtype=np.float64)
        if features.size == 0:
            raise ValueError("empty features")
        logits = mlp.apply(features).reshape(-1)
        return 1.0 / (1.0 + np.exp(-logits))
    raise ValueError(f"unknown inlier backend: {backend!r}")


def select_topk(scores: np.ndarray, fraction: float) -> np.ndarray:
    """Indices of the ceil(fraction * n) highest scores, ascending.

    Ties are broken in favor of the lower index.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.size == 0:
        raise ValueError("empty scores")
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    k = math.ceil(fraction * scores.size)
    order = np.argsort(-scores, kind="stable")  # stable: equal scores keep index order
    return np.sort(order[:k])


def select_by_threshold(scores: np.ndarray, threshold: float) -> np.ndarray:
    """Indices of scores at or above the threshold, ascending."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    return np.flatnonzero(scores >= threshold)


def soft_correspondence(
    fx_kept: np.ndarray, fy_kept: np.ndarray, y_kept_points: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Soft match of every kept template point into the kept search points.

    Returns ``(targets, m)``: the row-stochastic map ``m`` is the row softmax
    of feature inner products (max-subtracted) and each target is the
    m-weighted convex combination of the kept search points.
    """
    fx_kept = np.asarray(fx_kept, dtype=np.float64)
    fy_kept = np.asarray(fy_kept, dtype=np.float64)
    if fx_kept.size == 0 or fy_kept.size == 0:
        raise ValueError("filtered features must be nonempty on both sides")
    logits = fx_kept @ fy_kept.T
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    m = e / e.sum(axis=1, keepdims=True)
    targets = m @ np.asarray(y_kept_points, dtype=np.float64)
    return targets, m


def weighted_svd(
    src: np.ndarray, dst: np.ndarray, weights: np.ndarray
) -> tuple[RigidTransform, bool]:
    """Weighted least-squares rigid fit of ``src`` onto ``dst``.

    Minimizes sum_i w_i ||R src_i + t - dst_i||^2 in closed form: weighted
    centroids are removed, the weighted cross-covariance is decomposed by
    SVD, and a determinant fix prevents reflections. Returns the transform
    and a degeneracy flag; degenerate inputs (fewer than 3 positive-weight
    points, zero total weight, or cross-covariance rank < 2) yield the
    identity with the flag set.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 3)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 3)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(src) != len(dst) or len(src) != len(w):
        raise ValueError(f"length mismatch: {len(src)} src, {len(dst)} dst, {len(w)} weights")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if len(src) < 3 or np.count_nonzero(w > 0) < 3 or total <= 0:
        return RigidTransform.identity(), True
    w = w / total
    c_src = w @ src
    c_dst = w @ dst
    h = (src - c_src).T @ ((dst - c_dst) * w[:, None])
    u, s, vt = np.linalg.svd(h)
    if s[1] <= 1e-12 * max(s[0], 1e-300):
        return RigidTransform.identity(), True
    v = vt.T
    d = np.sign(np.linalg.det(v @ u.T))
    rotation = v @ np.diag([1.0, 1.0, d]) @ u.T
    translation = c_dst - rotation @ c_src
    return RigidTransform(rotation, translation), False


def register(template: PointCloud, search: PointCloud, cfg: RegisterConfig | None = None) -> RegistrationResult:
    """Full registration pass; both clouds must share the canonical frame."""
    cfg = cfg or RegisterConfig()
    if len(template) == 0 or len(search) == 0:
        raise ValueError("both clouds must be nonempty")
    weights = cfg.resolved_weights()
    fx, fy = tsnonlocal(template, search, weights, cfg.gate, cfg.k_neighbors)

    if cfg.inlier_backend == "mnn":
        t_scores = inlier_scores(
            fx, "mnn", own_points=template.points, other_points=search.points, tau=cfg.tau
        )
        s_scores = inlier_scores(
            fy, "mnn", own_points=search.points, other_points=template.points, tau=cfg.tau
        )
    else:
        mlp = cfg.resolved_inlier_mlp()
        t_scores = inlier_scores(fx, cfg.inlier_backend, mlp=mlp)
        s_scores = inlier_scores(fy, cfg.inlier_backend, mlp=mlp)

    if cfg.inlier_thresholds is not None:
        t_keep = select_by_threshold(t_scores, cfg.inlier_thresholds[0])
        s_keep = select_by_threshold(s_scores, cfg.inlier_thresholds[1])
    else:
        t_keep = select_topk(t_scores, cfg.inlier_fraction)
        s_keep = select_topk(s_scores, cfg.inlier_fraction)

    if t_keep.size == 0 or s_keep.size == 0:
        return RegistrationResult(
            RigidTransform.identity(), t_scores, s_scores, t_keep, s_keep,
            np.zeros((0, 3)), degenerate=True,
        )

    targets, _ = soft_correspondence(fx[t_keep], fy[s_keep], search.points[s_keep])
    transform, degenerate = weighted_svd(template.points[t_keep], targets, t_scores[t_keep])
    return RegistrationResult(
        transform, t_scores, s_scores, t_keep, s_keep, targets, degenerate=degenerate
    )
