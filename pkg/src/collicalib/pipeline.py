"""End-to-end calibration pipelines shared by the CLI and the test suite."""

from __future__ import annotations

from dataclasses import dataclass

from . import attitude, bundle, dlt
from .attitude import AttitudeResult, PlanarCorrespondence
from .bundle import RefinedCalibration, RobustCost
from .dlt import Correspondence, InitialCalibration
from .errors import MatchError
from .geometry import CameraIntrinsics, DistortionCoefficients
from .lm import LMSettings
from .synthetic import derive_seed
from .virtual_points import DepthRange, ReferenceCamera, generate_virtual_points


@dataclass
class CameraPipelineResult:
    initial: InitialCalibration
    refined: RefinedCalibration
    correspondences: list[Correspondence]
    n_central: int
    n_edge: int


def run_camera_calibration(
    reference_camera: ReferenceCamera,
    reference_observations: list,
    test_observations: list,
    image_size: tuple[int, int],
    seed: int,
    depth_range: DepthRange | None = None,
    cost: RobustCost | None = None,
    settings: LMSettings | None = None,
    central_fraction: float = dlt.DEFAULT_CENTRAL_FRACTION,
) -> CameraPipelineResult:
    """Virtual control points -> DLT -> distortion fit -> bundle adjustment.

    The depth draws are seeded by derive_seed(seed, "virtual-depths") over
    the reference observations in their given order, so rerunning with the
    seed used at simulation time reproduces the simulated geometry exactly.
    Feature ids must match one-to-one between the two observation lists.
    """
    vps = generate_virtual_points(
        reference_camera,
        reference_observations,
        depth_range if depth_range is not None else DepthRange(),
        derive_seed(seed, "virtual-depths"),
    )
    test_by_id = {obs_id: pixel for obs_id, pixel in test_observations}
    if len(test_by_id) != len(test_observations):
        raise MatchError("test observations contain duplicate ids")
    vp_ids = {vp.id for vp in vps}
    only_reference = sorted(vp_ids - set(test_by_id))
    only_test = sorted(set(test_by_id) - vp_ids)
    if only_reference or only_test:
        raise MatchError(
            "feature ids differ between datasets: "
            f"only in reference {only_reference[:20]}, only in test {only_test[:20]}"
        )
    correspondences = [
        Correspondence(id=vp.id, pixel=test_by_id[vp.id], point=vp.position) for vp in vps
    ]

    central, edge = dlt.split_central_edge(correspondences, image_size, central_fraction)
    initial = dlt.calibrate_single_image(central, edge)
    refined = bundle.refine_camera(initial, correspondences, cost, settings)
    return CameraPipelineResult(
        initial=initial,
        refined=refined,
        correspondences=correspondences,
        n_central=len(central),
        n_edge=len(edge),
    )


def run_attitude_calibration(
    K: CameraIntrinsics,
    d: DistortionCoefficients,
    planar: list[PlanarCorrespondence],
    settings: LMSettings | None = None,
) -> AttitudeResult:
    """Homography -> closed-form pose -> LM refinement -> attitude transfer."""
    H = attitude.estimate_homography(planar, K, d)
    R0, t0 = attitude.decompose_homography(H, K)
    return attitude.refine_pose(K, d, R0, t0, planar, settings)
