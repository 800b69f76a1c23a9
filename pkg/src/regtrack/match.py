"""Outlier-robust feature matching: positivization, slack Sinkhorn, refinement.

A raw similarity matrix is first mapped to strictly positive values, then
balanced by alternating row/column normalization on a slack-augmented matrix
(the extra row/column absorbs unmatched mass), and finally reweighted by a
spatial distance map between the registered template and the search area.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SinkhornConfig",
    "positivize",
    "sinkhorn_slack",
    "sinkhorn_slack_full",
    "distance_map",
    "refine",
]

_STD_EPS = 1e-6


@dataclass
class SinkhornConfig:
    max_iterations: int = 30
    tolerance: float = 1e-4
    slack_value: float = 1.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.slack_value <= 0:
            raise ValueError("slack_value must be > 0")


def positivize(a: np.ndarray) -> np.ndarray:
    """Z-score over the whole matrix, then elementwise exp; output is > 0.

    A zero-variance input z-scores to all zeros and therefore maps to all
    ones (the epsilon on the std makes this well defined).
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a nonempty 2-d matrix, got shape {a.shape}")
    z = (a - a.mean()) / (a.std() + _STD_EPS)
    return np.exp(z)


def sinkhorn_slack_full(a_pos: np.ndarray, cfg: SinkhornConfig | None = None) -> np.ndarray:
    """Balanced (N+1) x (M+1) slack-augmented matrix.

    The slack row and column start at ``cfg.slack_value`` and are never
    normalization targets themselves; they only rescale as members of the
    real rows/columns. Real rows and columns are alternately normalized to
    sum 1 (sums taken over all N+1 or M+1 entries) until the largest
    deviation of any constrained sum from 1 drops below ``cfg.tolerance`` or
    ``cfg.max_iterations`` sweeps have run.
    """
    cfg = cfg or SinkhornConfig()
    a_pos = np.asarray(a_pos, dtype=np.float64)
    if a_pos.ndim != 2 or a_pos.size == 0:
        raise ValueError(f"expected a nonempty 2-d matrix, got shape {a_pos.shape}")
    if not np.all(a_pos > 0) or not np.all(np.isfinite(a_pos)):
        raise ValueError("requires positive matrix")
    n, m = a_pos.shape
    full = np.full((n + 1, m + 1), cfg.slack_value, dtype=np.float64)
    full[:n, :m] = a_pos
    for _ in range(cfg.max_iterations):
        full[:n] /= full[:n].sum(axis=1, keepdims=True)
        full[:, :m] /= full[:, :m].sum(axis=0, keepdims=True)
        row_dev = np.abs(full[:n].sum(axis=1) - 1.0).max()
        col_dev = np.abs(full[:, :m].sum(axis=0) - 1.0).max()
        if max(row_dev, col_dev) < cfg.tolerance:
            break
    return full


def sinkhorn_slack(a_pos: np.ndarray, cfg: SinkhornConfig | None = None) -> np.ndarray:
    """Inner N x M block of the balanced slack-augmented matrix."""
    n, m = np.asarray(a_pos).shape
    return sinkhorn_slack_full(a_pos, cfg)[:n, :m]


def distance_map(xbar_points: np.ndarray, y_points: np.ndarray, sigma: float) -> np.ndarray:
    """Registration-aided mask D_ij = max(1 - d_ij^2 / sigma^2, 0).

    ``d_ij`` is the 3D Euclidean distance between registered template point i
    and search point j; pairs farther apart than ``sigma`` are zeroed.
    """
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    xbar_points = np.asarray(xbar_points, dtype=np.float64).reshape(-1, 3)
    y_points = np.asarray(y_points, dtype=np.float64).reshape(-1, 3)
    diff = xbar_points[:, None, :] - y_points[None, :, :]
    d2 = np.einsum("nmi,nmi->nm", diff, diff)
    return np.maximum(1.0 - d2 / sigma**2, 0.0)


def refine(a_tilde: np.ndarray, d_reg: np.ndarray) -> np.ndarray:
    """Hadamard product of the feature matching map and the distance map."""
    a_tilde = np.asarray(a_tilde, dtype=np.float64)
    d_reg = np.asarray(d_reg, dtype=np.float64)
    if a_tilde.shape != d_reg.shape:
        raise ValueError(f"shape mismatch: {a_tilde.shape} vs {d_reg.shape}")
    return a_tilde * d_reg
