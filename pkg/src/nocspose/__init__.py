"""Geometric half of dense-correspondence 6D pose estimation.

NOCS map rendering, correspondence decoding, RANSAC+EPnP, pose-error metrics
and a correspondence-map degradation simulator.
"""

from .augment import DEFAULT_AUG_SPEC, AugSpec, AugStep, apply_photometric_aug, augment_batch
from .camera import LMO_INTRINSICS, CameraIntrinsics, Pose, project, random_rotation, rotation_error_deg
from .crop import CropInfo, Roi, crop_roi
from .degrade import KINDS, DegradationSpec, degrade_map
from .errors import (
    BehindCameraError,
    ConfigError,
    CropError,
    DegenerateConfigurationError,
    DegenerateMeshError,
    InsufficientDataError,
    MeshParseError,
    NocsPoseError,
    NoConsensusError,
    UnsupportedGeometryError,
)
from .mapio import load_map, read_sidecar, roundtrip_8bit, save_map, write_sidecar
from .mesh import (
    ModelInfo,
    NocsMesh,
    NocsTransform,
    TriangleMesh,
    compute_model_info,
    load_mesh,
    nocs_to_model,
    normalize_to_nocs,
    save_ply,
)
from .metrics import (
    MetricReport,
    add_metric,
    add_recall,
    average_recall_star,
    evaluate,
    iou,
    mse,
    mspd,
    mssd,
)
from .pnp import (
    Correspondence2D3D,
    CorrespondenceSet,
    PoseEstimate,
    RansacParams,
    epnp,
    extract_correspondences,
    ransac_pnp,
    reprojection_error,
)
from .render import CorrespondenceMap, mask_bbox, render_flat_rgb, render_nocs_map

__version__ = "0.1.0"
