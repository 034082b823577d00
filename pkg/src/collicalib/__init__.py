"""collicalib: single-image camera and attitude calibration for collimator rigs.

The package recovers camera intrinsics, radial distortion, and the
camera-to-reference attitude from single-image observations of a collimator
reticle, and ships a synthetic rig that generates ground-truth datasets so
every result can be verified by round trip.
"""

__version__ = "0.1.0"

from .attitude import (
    AttitudeResult,
    PlanarCorrespondence,
    decompose_homography,
    estimate_homography,
    refine_pose,
    target_direction,
)
from .bundle import RefinedCalibration, RobustCost, refine_camera, reprojection_stats
from .dlt import (
    Correspondence,
    InitialCalibration,
    ProjectionMatrix,
    calibrate_single_image,
    decompose_projection,
    estimate_initial_distortion,
    solve_projection_matrix,
    split_central_edge,
)
from .geometry import (
    CameraIntrinsics,
    DistortionCoefficients,
    EulerAnglesXYZ,
    PoseRT,
    axis_angle_to_matrix,
    distort,
    matrix_to_axis_angle,
    matrix_to_euler_xyz,
    pixel_to_ray,
    project,
    undistort,
)
from .lm import LMSettings
from .pipeline import run_attitude_calibration, run_camera_calibration
from .synthetic import (
    ReticleSpec,
    RigScenario,
    TargetScenario,
    build_nominal_intrinsics,
    derive_seed,
    simulate_field_test,
    simulate_reticle_observation,
)
from .virtual_points import (
    DepthRange,
    ReferenceCamera,
    VirtualControlPoint,
    generate_virtual_points,
)

__all__ = [
    "__version__",
    "AttitudeResult",
    "CameraIntrinsics",
    "Correspondence",
    "DepthRange",
    "DistortionCoefficients",
    "EulerAnglesXYZ",
    "InitialCalibration",
    "LMSettings",
    "PlanarCorrespondence",
    "PoseRT",
    "ProjectionMatrix",
    "ReferenceCamera",
    "RefinedCalibration",
    "ReticleSpec",
    "RigScenario",
    "RobustCost",
    "TargetScenario",
    "VirtualControlPoint",
    "axis_angle_to_matrix",
    "build_nominal_intrinsics",
    "calibrate_single_image",
    "decompose_homography",
    "decompose_projection",
    "derive_seed",
    "distort",
    "estimate_homography",
    "estimate_initial_distortion",
    "generate_virtual_points",
    "matrix_to_axis_angle",
    "matrix_to_euler_xyz",
    "pixel_to_ray",
    "project",
    "refine_camera",
    "refine_pose",
    "reprojection_stats",
    "run_attitude_calibration",
    "run_camera_calibration",
    "simulate_field_test",
    "simulate_reticle_observation",
    "solve_projection_matrix",
    "split_central_edge",
    "target_direction",
    "undistort",
]
