"""viewforge: forge pseudo novel-view training pairs from single images.

Lift an image with metric depth and normals into a point cloud, sample a
relative camera pose from a six-strategy mixture, and reproject with
z-buffering and backface culling into a pseudo target image plus visibility
mask. Includes masked reconstruction losses, PSNR/SSIM evaluation with a
best-scale sweep, an analytic-scene oracle, and a deterministic batch CLI.
"""
from .geometry import (
    CameraIntrinsics,
    PoseVector7,
    RigidTransform,
    apply,
    camera_center,
    compose,
    identity_transform,
    intrinsics_from_hfov,
    invert,
    look_at,
    matrix_to_quat,
    quat_to_matrix,
    rotation_about_axis,
    transform_points,
)
from .lifting import PointCloud, SceneStats, project, project_points, scene_stats, unproject
from .losses import (
    MaskedImagePair,
    masked_charbonnier,
    masked_feature_cosine,
    masked_l1,
    masked_mse,
    masked_mse_grad,
)
from .metrics import MetricReport, aggregate_report, psnr, scale_sweep, ssim
from .oracle import (
    AnalyticScene,
    FrontoPlane,
    SlantedPlane,
    Sphere,
    brute_force_render,
    realize,
    run_equivalence_trials,
)
from .pipeline import (
    ManifestEntry,
    RenderedView,
    RunConfig,
    generate_run,
    iter_views,
    load_config,
    load_manifest,
)
from .rendering import PseudoView, backface_visible, render, render_pair
from .sampling import (
    RandomStream,
    SampledPose,
    SamplerConfig,
    Strategy,
    log_uniform,
    perturb_direction,
    sample_anchor,
    sample_combined,
    sample_frontal_hemisphere,
    sample_normal_derived,
    sample_pose,
    sample_rotation,
    sample_translation,
)

__version__ = "0.1.0"
