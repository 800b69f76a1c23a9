"""Training-free point features and iterative gated cross-attention enhancement.

Initial per-point embeddings come from a handcrafted geometric descriptor
projected by a seeded (or file-loaded) linear layer. The embeddings are then
refined by T rounds of bidirectional cross-attention between the two clouds,
where a binary elliptical gate in the yz-plane suppresses messages from
spatially implausible partners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geom import PointCloud

__all__ = [
    "LinearLayer",
    "Mlp",
    "GateConfig",
    "AttentionWeights",
    "IterationWeights",
    "TsnonlocalWeights",
    "seeded_linear",
    "seeded_mlp",
    "save_layers",
    "load_layers",
    "handcrafted_descriptor",
    "raw_descriptor",
    "spatial_gate",
    "gate_matrix",
    "cross_attention_step",
    "tsnonlocal",
    "DESCRIPTOR_DIM",
]

DESCRIPTOR_DIM = 10


@dataclass
class LinearLayer:
    """Dense layer y = W x + b with W of shape (out_dim, in_dim)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if w.ndim != 2 or b.shape[0] != w.shape[0]:
            raise ValueError(f"inconsistent layer shapes: weight {w.shape}, bias {b.shape}")
        self.weight = w
        self.bias = b

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weight.T + self.bias


@dataclass
class Mlp:
    """Stack of linear layers with ReLU between layers (none after the last)."""

    layers: list[LinearLayer]

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(
                    f"layer dims do not chain: {a.out_dim} -> {b.in_dim}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def apply(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers[:-1]:
            x = np.maximum(layer.apply(x), 0.0)
        return self.layers[-1].apply(x)


def seeded_linear(in_dim: int, out_dim: int, rng: np.random.Generator) -> LinearLayer:
    """Kaiming-style uniform weights in [-1/sqrt(fan_in), +1/sqrt(fan_in)].

    Biases start at zero: the feature stack is then positively homogeneous
    in its input scale, so rescaling the raw descriptor acts as a clean
    softmax temperature instead of drowning features under constant offsets.
    """
    bound = 1.0 / math.sqrt(in_dim)
    weight = rng.uniform(-bound, bound, size=(out_dim, in_dim))
    return LinearLayer(weight, np.zeros(out_dim))


def seeded_mlp(dims: list[int], rng: np.random.Generator) -> Mlp:
    """MLP with the given layer widths, e.g. [d, d, d] for a 2-layer block."""
    return Mlp([seeded_linear(a, b, rng) for a, b in zip(dims, dims[1:])])


# ----------------------------------------------------------------------------
# Weight container file: a flat list of (rows, cols, row-major weights, bias).


def save_layers(path, layers: list[LinearLayer]) -> None:
    """Write layers to the self-describing text container (see README)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("regtrack-weights 1\n")
        fh.write(f"layers {len(layers)}\n")
        for layer in layers:
            fh.write(f"layer {layer.out_dim} {layer.in_dim}\n")
            for row in layer.weight:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            fh.write(" ".join(repr(float(v)) for v in layer.bias) + "\n")


def load_layers(path) -> list[LinearLayer]:
    """Read a weight container written by :func:`save_layers`."""
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.read().split()
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(tokens):
            raise ValueError(f"{path}: truncated weight file")
        out = tokens[pos : pos + n]
        pos += n
        return out

    magic, version = take(2)
    if magic != "regtrack-weights" or version != "1":
        raise ValueError(f"{path}: not a regtrack-weights v1 file")
    key, count = take(2)
    if key != "layers":
        raise ValueError(f"{path}: expected 'layers <n>'")
    layers = []
    for _ in range(int(count)):
        key, rows, cols = take(3)
        if key != "layer":
            raise ValueError(f"{path}: expected 'layer <rows> <cols>'")
        rows, cols = int(rows), int(cols)
        weight = np.array([float(v) for v in take(rows * cols)]).reshape(rows, cols)
        bias = np.array([float(v) for v in take(rows)])
        layers.append(LinearLayer(weight, bias))
    if pos != len(tokens):
        raise ValueError(f"{path}: trailing data after last layer")
    return layers


# ----------------------------------------------------------------------------
# Handcrafted descriptor (stand-in for a learned point embedding backbone).

# Relative scales of the raw descriptor blocks. Coordinates are damped so
# that feature matching stays soft in space (blended correspondences pull
# toward structure centroids rather than snapping to the nearest point),
# while local-shape statistics keep their natural O(1) range.
_COORD_SCALE = np.array([0.5, 0.5, 0.5])
_EIGEN_SCALE = 1.5
_HEIGHT_SCALE = 1.0
_DENSITY_SCALE = 1.0
_RADIAL_SCALE = 0.5


def raw_descriptor(c: PointCloud, k_neighbors: int = 16) -> np.ndarray:
    """10-dim per-point geometric descriptor in the cloud's own frame.

    Blocks: scaled coordinates (3); covariance eigen-features linearity /
    planarity / scattering over the k nearest neighbors (3); height above the
    cloud's minimum z (1); local density (1); radial distance from the frame
    origin (1); constant one (1). Neighborhoods are clamped to the available
    points when the cloud is smaller than ``k_neighbors + 1``.
    """
    if len(c) < 1:
        raise ValueError("empty cloud")
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be >= 1")
    pts = c.points
    n = len(c)
    k = min(k_neighbors, n - 1)

    eigen = np.zeros((n, 3))
    density = np.zeros(n)
    if k >= 1:
        tree = cKDTree(pts)
        dists, idx = tree.query(pts, k=k + 1)  # first hit is the point itself
        neigh = pts[idx]  # (n, k+1, 3)
        centered = neigh - neigh.mean(axis=1, keepdims=True)
        cov = np.einsum("nki,nkj->nij", centered, centered) / (k + 1)
        evals = np.linalg.eigvalsh(cov)[:, ::-1]  # descending
        lam1 = evals[:, 0]
        safe = lam1 > 1e-12
        eigen[safe, 0] = (evals[safe, 0] - evals[safe, 1]) / lam1[safe]
        eigen[safe, 1] = (evals[safe, 1] - evals[safe, 2]) / lam1[safe]
        eigen[safe, 2] = evals[safe, 2] / lam1[safe]
        # mean neighbor spacing relative to the cloud median, so the feature
        # is comparable between clouds sampled at different densities
        spacing = dists[:, 1:].mean(axis=1)
        density = 1.0 / (1.0 + spacing / max(float(np.median(spacing)), 1e-12))

    height = pts[:, 2] - pts[:, 2].min()
    radial = np.linalg.norm(pts, axis=1)
    desc = np.empty((n, DESCRIPTOR_DIM))
    desc[:, 0:3] = pts * _COORD_SCALE
    desc[:, 3:6] = eigen * _EIGEN_SCALE
    desc[:, 6] = height * _HEIGHT_SCALE
    desc[:, 7] = density * _DENSITY_SCALE
    desc[:, 8] = radial * _RADIAL_SCALE
    desc[:, 9] = 1.0
    return desc


def handcrafted_descriptor(
    c: PointCloud, k_neighbors: int, projection: LinearLayer
) -> np.ndarray:
    """Raw descriptor projected to the working feature dimension."""
    if projection.in_dim != DESCRIPTOR_DIM:
        raise ValueError(
            f"projection expects input dim {projection.in_dim}, "
            f"descriptor is {DESCRIPTOR_DIM}-dim"
        )
    return projection.apply(raw_descriptor(c, k_neighbors))


# ----------------------------------------------------------------------------
# Elliptical spatial gate and cross-attention.


@dataclass
class GateConfig:
    """Semi-axes of the yz-plane admissibility ellipse (meters)."""

    a: float = 1.6  # y axis (left/right)
    b: float = 0.4  # z axis (up/down)

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ValueError(f"gate requires a >= b > 0, got a={self.a}, b={self.b}")


def spatial_gate(xi: np.ndarray, yj: np.ndarray, g: GateConfig) -> float:
    """1.0 iff yj falls in the yz-ellipse around xi, else 0.0 (x is ignored)."""
    d = (yj[1] - xi[1]) ** 2 / g.a**2 + (yj[2] - xi[2]) ** 2 / g.b**2
    return 1.0 if d <= 1.0 else 0.0


def gate_matrix(x_points: np.ndarray, y_points: np.ndarray, g: GateConfig) -> np.ndarray:
    """(n, m) binary gate between every template/search point pair."""
    dy = y_points[None, :, 1] - x_points[:, None, 1]
    dz = y_points[None, :, 2] - x_points[:, None, 2]
    d = dy**2 / g.a**2 + dz**2 / g.b**2
    return (d <= 1.0).astype(np.float64)


def _row_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class AttentionWeights:
    """One direction of one cross-attention round: q/k/v maps plus the update MLP."""

    query: LinearLayer
    key: LinearLayer
    value: LinearLayer
    mlp: Mlp

    @staticmethod
    def seeded(dim: int, rng: np.random.Generator) -> "AttentionWeights":
        return AttentionWeights(
            query=seeded_linear(dim, dim, rng),
            key=seeded_linear(dim, dim, rng),
            value=seeded_linear(dim, dim, rng),
            mlp=seeded_mlp([dim, dim, dim], rng),
        )

    def layers(self) -> list[LinearLayer]:
        return [self.query, self.key, self.value, *self.mlp.layers]


def cross_attention_step(
    fx: np.ndarray,
    fy: np.ndarray,
    x_cloud: PointCloud,
    y_cloud: PointCloud,
    w: AttentionWeights,
    g: GateConfig,
    gate: np.ndarray | None = None,
) -> np.ndarray:
    """One receiver update: fx' = fx + MLP(sum_j alpha_ij * beta_ij * V_j).

    alpha is the row softmax of Q Kᵀ / sqrt(d) over all sender points
    (max-subtracted for stability); the binary gate beta multiplies alpha
    after the softmax. A precomputed ``gate`` matrix may be passed to avoid
    recomputing it every round.
    """
    if fx.shape[0] != len(x_cloud) or fy.shape[0] != len(y_cloud):
        raise ValueError("feature row counts must match the clouds")
    if fx.shape[1] != w.query.in_dim or fy.shape[1] != w.key.in_dim:
        raise ValueError(
            f"feature dim {fx.shape[1]}/{fy.shape[1]} does not match weights "
            f"(expect {w.query.in_dim})"
        )
    d = fx.shape[1]
    q = w.query.apply(fx)
    k = w.key.apply(fy)
    v = w.value.apply(fy)
    alpha = _row_softmax(q @ k.T / math.sqrt(d))
    if gate is None:
        gate = gate_matrix(x_cloud.points, y_cloud.points, g)
    message = (alpha * gate) @ v
    return fx + w.mlp.apply(message)


@dataclass
class IterationWeights:
    """Weights of one enhancement round: search->template and template->search."""

    y_to_x: AttentionWeights
    x_to_y: AttentionWeights


@dataclass
class TsnonlocalWeights:
    """All weights of the feature stage: shared embedding + per-round attention."""

    embedding: LinearLayer  # DESCRIPTOR_DIM -> d, shared by both clouds
    rounds: list[IterationWeights]

    @property
    def dim(self) -> int:
        return self.embedding.out_dim

    @property
    def iterations(self) -> int:
        return len(self.rounds)

    @staticmethod
    def seeded(dim: int, iterations: int, seed) -> "TsnonlocalWeights":
        if iterations < 1:
            raise ValueError("iterations must be >= 1")
        rng = np.random.default_rng(seed)
        embedding = seeded_linear(DESCRIPTOR_DIM, dim, rng)
        rounds = [
            IterationWeights(AttentionWeights.seeded(dim, rng), AttentionWeights.seeded(dim, rng))
            for _ in range(iterations)
        ]
        return TsnonlocalWeights(embedding, rounds)

    def to_layers(self) -> list[LinearLayer]:
        """Flatten to the canonical on-disk layer order (see README)."""
        layers = [self.embedding]
        for it in self.rounds:
            layers.extend(it.y_to_x.layers())
            layers.extend(it.x_to_y.layers())
        return layers

    @staticmethod
    def from_layers(layers: list[LinearLayer]) -> "TsnonlocalWeights":
        if (len(layers) - 1) % 12 != 0 or len(layers) < 13:
            raise ValueError(
                f"expected 1 + 12*T layers for the feature stage, got {len(layers)}"
            )
        embedding = layers[0]

        def attn(chunk):
            return AttentionWeights(chunk[0], chunk[1], chunk[2], Mlp(list(chunk[3:6])))

        rounds = []
        for base in range(1, len(layers), 12):
            rounds.append(
                IterationWeights(attn(layers[base : base + 6]), attn(layers[base + 6 : base + 12]))
            )
        return TsnonlocalWeights(embedding, rounds)


def tsnonlocal(
    x_cloud: PointCloud,
    y_cloud: PointCloud,
    weights: TsnonlocalWeights,
    g: GateConfig,
    k_neighbors: int = 16,
) -> tuple[np.ndarray, np.ndarray]:
    """Enhanced features for both clouds after all bidirectional rounds.

    Both directions of a round read the previous round's features, so the
    result is symmetric when the two clouds and both direction weights match.
    """
    fx = handcrafted_descriptor(x_cloud, k_neighbors, weights.embedding)
    fy = handcrafted_descriptor(y_cloud, k_neighbors, weights.embedding)
    gate_xy = gate_matrix(x_cloud.points, y_cloud.points, g)
    for it in weights.rounds:
        new_fx = cross_attention_step(fx, fy, x_cloud, y_cloud, it.y_to_x, g, gate=gate_xy)
        new_fy = cross_attention_step(fy, fx, y_cloud, x_cloud, it.x_to_y, g, gate=gate_xy.T)
        fx, fy = new_fx, new_fy
    return fx, fy
