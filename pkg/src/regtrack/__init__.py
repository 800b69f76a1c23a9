"""Registration-driven 3D single-object tracking on point clouds.

Training-free pipeline: handcrafted descriptors enhanced by gated
cross-attention, inlier-weighted SVD registration, slack-Sinkhorn feature
matching with registration-aided refinement, and a synthetic tracking
benchmark with Success/Precision metrics.
"""

from .geom import (
    BBox3D,
    PointCloud,
    RigidTransform,
    apply_transform,
    bbox_iou,
    box_to_canonical,
    box_to_world,
    canonicalize,
    compose,
    crop,
    decanonicalize,
    heading_from_rotation,
    invert,
    resample,
    rotation_angle_between,
    rotation_z,
    wrap_angle,
)
from .feat import (
    GateConfig,
    LinearLayer,
    Mlp,
    TsnonlocalWeights,
    handcrafted_descriptor,
    spatial_gate,
    tsnonlocal,
)
from .reg import (
    RegisterConfig,
    RegistrationResult,
    inlier_scores,
    register,
    select_topk,
    soft_correspondence,
    weighted_svd,
)
from .match import SinkhornConfig, distance_map, positivize, refine, sinkhorn_slack
from .agg import AggregationWeights, LocalizationOutput, localize, target_feature
from .loss import bce_loss, corr_loss, gt_transform, inlier_labels, trans_loss
from .sim import (
    SequenceConfig,
    SyntheticSequence,
    TrackerConfig,
    TrackReport,
    precision_metric,
    registration_pair,
    run_tracker,
    success_metric,
    synth_object,
    synth_sequence,
)
from .io import read_xyz, write_ply, write_xyz

__version__ = "0.1.0"
