"""Synthetic ground-truth rig: reticle observations, camera pairs, field test.

Stands in for the physical collimator, calibration frame, and flight test so
every solver result can be checked by round trip. Feature detection is
abstracted to exact id-matched correspondences; detector error is modeled
as i.i.d. Gaussian pixel noise. The collimator's at-infinity property is
represented implicitly: the test camera observes the virtual control points
built from the reference camera's rays, with no explicit optics model.

All randomness flows from integer seeds through `derive_seed(seed, tag)`, so
any subsystem can be reproduced independently:

    tag "reticle-noise"     pixel noise on a reticle observation
    tag "virtual-depths"    depth draws for virtual control points
    tag "control-noise"     pixel noise on the test camera's control image
    tag "field-noise-<k>"   pixel noise on field-test frame k

Generators are numpy PCG64 (np.random.default_rng).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import geometry
from .attitude import PlanarCorrespondence, direction_to_yaw_pitch
from .dlt import Correspondence
from .errors import BehindCamera, PointBehindCamera, PointOutsideFrame
from .geometry import (
    CameraIntrinsics,
    DistortionCoefficients,
    PoseRT,
    RotationMatrix,
)
from .virtual_points import (
    DepthRange,
    ReferenceCamera,
    VirtualControlPoint,
    generate_virtual_points,
)


def derive_seed(seed: int, tag: str) -> int:
    """Stable 64-bit sub-seed for a purpose tag (sha256 of "seed:tag")."""
    digest = hashlib.sha256(f"{seed}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class ReticleSpec:
    """Center-anchored planar feature grid: ids run row-major from 0."""

    rows: int = 15
    cols: int = 15
    pitch_m: float = 0.02

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValueError("reticle needs at least 2 rows and 2 cols")
        if not self.pitch_m > 0:
            raise ValueError("reticle pitch must be positive")

    def points(self) -> list[tuple[int, np.ndarray]]:
        """(id, (X_t, Y_t)) for every feature, centered on the plane origin."""
        half_c = (self.cols - 1) / 2.0
        half_r = (self.rows - 1) / 2.0
        out = []
        for r in range(self.rows):
            for c in range(self.cols):
                out.append(
                    (
                        r * self.cols + c,
                        np.array([(c - half_c) * self.pitch_m, (r - half_r) * self.pitch_m]),
                    )
                )
        return out


@dataclass(frozen=True)
class RigScenario:
    """One camera observing the reticle, with ground truth and noise level.

    `pose` maps target-frame points into this camera's frame. In a paired
    camera-calibration simulation, both scenarios share one target frame,
    and the test camera's pose relative to the reference camera follows by
    composition.
    """

    intrinsics: CameraIntrinsics
    distortion: DistortionCoefficients
    pose: PoseRT
    reticle: ReticleSpec
    image_width: int
    image_height: int
    noise_sigma_px: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_sigma_px < 0:
            raise ValueError("noise_sigma_px must be >= 0")
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dimensions must be positive")


@dataclass(frozen=True)
class TargetScenario:
    """A far target for the field-test analog."""

    target_position_m: np.ndarray  # (3,) in the reference frame
    true_R_r: RotationMatrix

    def __post_init__(self):
        object.__setattr__(
            self, "target_position_m", np.asarray(self.target_position_m, dtype=np.float64)
        )
        object.__setattr__(self, "true_R_r", geometry.validate_rotation(self.true_R_r))


@dataclass
class SimulatedObservation:
    """Planar correspondences plus, for paired scenarios, the control form."""

    planar: list[PlanarCorrespondence]
    observations: list[tuple[int, np.ndarray]]  # (id, noisy pixel), same pixels
    control: list[Correspondence] | None = None
    virtual_points: list[VirtualControlPoint] | None = None
    true_relative_pose: PoseRT | None = None  # reference-camera frame -> test camera
    reference_observation: "SimulatedObservation | None" = None


def _apply_frame_policy(
    ids: list[int],
    exact_uv: np.ndarray,
    width: int,
    height: int,
    off_frame: str,
) -> np.ndarray:
    """Indices of points to keep; raises or drops per policy.

    The check uses the noise-free projection so the retained point set does
    not depend on the noise draw.
    """
    inside = (
        (exact_uv[:, 0] >= 0.0)
        & (exact_uv[:, 0] < width)
        & (exact_uv[:, 1] >= 0.0)
        & (exact_uv[:, 1] < height)
    )
    if np.all(inside):
        return np.arange(len(ids))
    outside = [ids[i] for i in np.nonzero(~inside)[0]]
    if off_frame == "drop":
        return np.nonzero(inside)[0]
    raise PointOutsideFrame(
        f"{len(outside)} point(s) project outside the {width}x{height} frame: "
        f"ids {outside[:20]}"
    )


def simulate_reticle_observation(
    scenario: RigScenario,
    *,
    reference: RigScenario | None = None,
    depth_range: DepthRange | None = None,
    depth_seed: int | None = None,
    off_frame: str = "error",
) -> SimulatedObservation:
    """Project the reticle through the scenario camera, with seeded noise.

    Always emits the planar correspondences (and bare pixel observations).
    When `reference` is given, additionally emits the virtual-control-point
    form: control points are generated from the reference camera's own
    (noisy) observation and re-imaged by this scenario's camera at the
    relative pose between the two cameras.

    Out-of-frame points follow `off_frame` ("error" or "drop"); points at
    non-positive depth always raise PointBehindCamera.
    """
    if off_frame not in ("error", "drop"):
        raise ValueError(f"off_frame must be 'error' or 'drop', got {off_frame!r}")
    grid = scenario.reticle.points()
    ids = [gid for gid, _ in grid]
    plane_pts = np.array([[xy[0], xy[1], 0.0] for _, xy in grid])

    exact_uv, z = geometry.project_with_depth(
        plane_pts, scenario.pose, scenario.intrinsics, scenario.distortion
    )
    if np.any(z <= 0):
        behind = [ids[i] for i in np.nonzero(z <= 0)[0]]
        raise PointBehindCamera(
            f"{len(behind)} reticle point(s) at non-positive depth: ids {behind[:20]}"
        )
    keep = _apply_frame_policy(
        ids, exact_uv, scenario.image_width, scenario.image_height, off_frame
    )

    noisy_uv = exact_uv.copy()
    if scenario.noise_sigma_px > 0:
        rng = np.random.default_rng(derive_seed(scenario.seed, "reticle-noise"))
        noisy_uv = exact_uv + rng.normal(0.0, scenario.noise_sigma_px, exact_uv.shape)

    planar = []
    observations = []
    for i in keep:
        gid, target = grid[i]
        planar.append(PlanarCorrespondence(id=gid, pixel=noisy_uv[i].copy(), target=target))
        observations.append((gid, noisy_uv[i].copy()))

    result = SimulatedObservation(planar=planar, observations=observations)
    if reference is None:
        return result

    if reference.reticle != scenario.reticle:
        raise ValueError("paired scenarios must share one reticle")
    ref_obs = simulate_reticle_observation(reference, off_frame=off_frame)
    if depth_seed is None:
        depth_seed = derive_seed(scenario.seed, "virtual-depths")
    vps = generate_virtual_points(
        ReferenceCamera(reference.intrinsics, reference.distortion),
        ref_obs.observations,
        depth_range if depth_range is not None else DepthRange(),
        depth_seed,
    )
    relative = scenario.pose.compose(reference.pose.inverse())
    control = _image_control_points(scenario, vps, relative)
    result.control = control
    result.virtual_points = vps
    result.true_relative_pose = relative
    result.reference_observation = ref_obs
    return result


def _image_control_points(
    scenario: RigScenario,
    vps: list[VirtualControlPoint],
    relative: PoseRT,
) -> list[Correspondence]:
    """Test-camera pixels of the virtual control points, with seeded noise.

    Control pixels outside the declared frame always raise: dropping them
    here would desynchronize the depth draws a later calibration run
    reproduces from the written reference observation.
    """
    positions = np.array([vp.position for vp in vps])
    ids = [vp.id for vp in vps]
    exact_uv, z = geometry.project_with_depth(
        positions, relative, scenario.intrinsics, scenario.distortion
    )
    if np.any(z <= 0):
        behind = [ids[i] for i in np.nonzero(z <= 0)[0]]
        raise PointBehindCamera(
            f"{len(behind)} control point(s) at non-positive depth: ids {behind[:20]}"
        )
    _apply_frame_policy(ids, exact_uv, scenario.image_width, scenario.image_height, "error")

    noisy_uv = exact_uv.copy()
    if scenario.noise_sigma_px > 0:
        rng = np.random.default_rng(derive_seed(scenario.seed, "control-noise"))
        noisy_uv = exact_uv + rng.normal(0.0, scenario.noise_sigma_px, exact_uv.shape)
    return [
        Correspondence(id=vp.id, pixel=noisy_uv[i].copy(), point=vp.position)
        for i, vp in enumerate(vps)
    ]


def simulate_field_test(
    rig: RigScenario, target: TargetScenario, *, frame: int = 0
) -> tuple[tuple[float, float], np.ndarray]:
    """One field observation: true (yaw, pitch) and the recorded pixel.

    The camera-to-reference translation is neglected (it is negligible at
    kilometer ranges), so the true direction is the target position itself.
    The pixel is the full-model image of that direction under the true
    attitude, plus seeded noise; it is not clipped to the physical frame.
    """
    u_ref = target.target_position_m / np.linalg.norm(target.target_position_m)
    truth = direction_to_yaw_pitch(u_ref)
    v_cam = target.true_R_r @ u_ref
    if v_cam[2] <= 0:
        raise BehindCamera("target direction has non-positive camera depth")
    uv, _ = geometry.project_with_depth(
        v_cam[None, :], PoseRT.identity(), rig.intrinsics, rig.distortion
    )
    pixel = uv[0].copy()
    if rig.noise_sigma_px > 0:
        rng = np.random.default_rng(derive_seed(rig.seed, f"field-noise-{frame}"))
        pixel = pixel + rng.normal(0.0, rig.noise_sigma_px, 2)
    return truth, pixel


def build_nominal_intrinsics(
    equiv_focal_mm: float,
    pixel_size_um: float,
    width_px: int,
    height_px: int,
) -> tuple[CameraIntrinsics, DistortionCoefficients]:
    """Spec-sheet starting guess: focal over pixel pitch, centered, no distortion."""
    if equiv_focal_mm <= 0 or pixel_size_um <= 0 or width_px <= 0 or height_px <= 0:
        raise ValueError("all nominal-intrinsics inputs must be positive")
    f = equiv_focal_mm * 1000.0 / pixel_size_um
    K = CameraIntrinsics(fx=f, fy=f, u0=width_px / 2.0, v0=height_px / 2.0)
    return K, DistortionCoefficients(0.0, 0.0)
