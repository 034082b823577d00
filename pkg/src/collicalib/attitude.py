"""Planar-target pose and camera-to-reference attitude.

The reticle features live on the plane Z = 0 of the target frame, so their
undistorted images are a homography of the plane. The homography is
estimated algebraically (normalized DLT), decomposed in closed form into a
rotation and a metric translation, and the pose refined by plain
least-squares LM over rotation and translation only. Because the target
frame is kept parallel to the reference frame by the rig, the recovered
target-to-camera rotation IS the camera-to-reference attitude.

Direction angles in the reference frame (x right, y down, z forward along
the nominal boresight):

    yaw   = atan2(x, z)                 positive toward +x
    pitch = atan2(-y, hypot(x, z))      positive above the horizon
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .bundle import camera_residual_jacobian, reprojection_stats
from .dlt import Correspondence
from .errors import (
    BehindCamera,
    DegenerateConfiguration,
    InsufficientPoints,
    NotConverged,
)
from .geometry import (
    CameraIntrinsics,
    DistortionCoefficients,
    EulerAnglesXYZ,
    PoseRT,
    RotationMatrix,
)
from .lm import LMInvalidStart, LMResult, LMSettings, lm_minimize

MIN_HOMOGRAPHY_POINTS = 4
_DEGENERACY_SV_RATIO = 1e-10


@dataclass(frozen=True)
class PlanarCorrespondence:
    """Observed pixel paired with its reticle-plane coordinates."""

    id: int
    pixel: np.ndarray  # (2,) observed (distorted) pixel
    target: np.ndarray  # (2,) meters on the reticle plane

    def __post_init__(self):
        object.__setattr__(self, "pixel", np.asarray(self.pixel, dtype=np.float64))
        object.__setattr__(self, "target", np.asarray(self.target, dtype=np.float64))

    @property
    def point3(self) -> np.ndarray:
        return np.array([self.target[0], self.target[1], 0.0])


@dataclass(frozen=True)
class AttitudeResult:
    R_t: RotationMatrix  # target frame -> camera frame
    t_t: np.ndarray  # (3,) meters
    R_r: RotationMatrix  # camera attitude relative to the reference (= R_t)
    euler: EulerAnglesXYZ
    rms_px: float
    solver: LMResult


def _normalizing_similarity(pts: np.ndarray) -> np.ndarray:
    """3x3 similarity moving the centroid to 0 with mean radius sqrt(2)."""
    centroid = pts.mean(axis=0)
    mean_dist = float(np.mean(np.linalg.norm(pts - centroid, axis=1)))
    if mean_dist == 0.0:
        raise DegenerateConfiguration("points coincide; cannot normalize")
    s = math.sqrt(2.0) / mean_dist
    T = np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])
    return T


def estimate_homography(
    points: list[PlanarCorrespondence],
    K: CameraIntrinsics,
    d: DistortionCoefficients,
) -> np.ndarray:
    """Plane-to-undistorted-image homography minimizing the algebraic error.

    Pixels are undistorted internally; both planes are similarity-normalized
    before the 2n x 9 null-space solve and the result is mapped back. The
    returned 3x3 matrix is defined up to scale.
    """
    if len(points) < MIN_HOMOGRAPHY_POINTS:
        raise InsufficientPoints(
            f"homography needs >= {MIN_HOMOGRAPHY_POINTS} points, got {len(points)}"
        )
    targets = np.array([p.target for p in points])
    pixels = np.array([p.pixel for p in points])
    ideal = geometry.undistort(pixels, K, d)

    Tt = _normalizing_similarity(targets)
    Tp = _normalizing_similarity(ideal)
    tn = targets @ Tt[:2, :2].T + Tt[:2, 2]
    pn = ideal @ Tp[:2, :2].T + Tp[:2, 2]

    n = len(points)
    A = np.zeros((2 * n, 9))
    X, Y = tn[:, 0], tn[:, 1]
    u, v = pn[:, 0], pn[:, 1]
    A[0::2, 0] = X
    A[0::2, 1] = Y
    A[0::2, 2] = 1.0
    A[0::2, 6] = -u * X
    A[0::2, 7] = -u * Y
    A[0::2, 8] = -u
    A[1::2, 3] = X
    A[1::2, 4] = Y
    A[1::2, 5] = 1.0
    A[1::2, 6] = -v * X
    A[1::2, 7] = -v * Y
    A[1::2, 8] = -v

    _, sv, Vt = np.linalg.svd(A)
    # A unique solution needs rank 8: the 8th singular value must be alive.
    if sv[7] <= _DEGENERACY_SV_RATIO * sv[0]:
        raise DegenerateConfiguration(
            "homography system is rank deficient (collinear target points?)"
        )
    Hn = Vt[-1].reshape(3, 3)
    H = np.linalg.solve(Tp, Hn) @ Tt
    return H / np.linalg.norm(H)


def decompose_homography(
    H: np.ndarray, K: CameraIntrinsics
) -> tuple[RotationMatrix, np.ndarray]:
    """Closed-form planar pose from a homography.

    The first two rotation columns are the normalized columns of K^-1 H; the
    translation is the third column scaled by the SAME factor as the first
    rotation column, which preserves the metric scale of the plane (a
    unit-normalized translation could not reproduce the observations). The
    overall homography sign is fixed by requiring the target origin to sit
    at positive depth, i.e. t_z > 0.
    """
    H = np.asarray(H, dtype=np.float64)
    B = np.linalg.solve(K.matrix, H)
    n1 = float(np.linalg.norm(B[:, 0]))
    n2 = float(np.linalg.norm(B[:, 1]))
    if n1 == 0.0 or n2 == 0.0:
        raise DegenerateConfiguration("homography has a zero column under K^-1")
    t = B[:, 2] / n1
    if abs(t[2]) <= 1e-15 * max(1.0, float(np.linalg.norm(t))):
        raise BehindCamera("target origin depth is zero for both homography signs")
    sign = 1.0 if t[2] > 0 else -1.0
    r1 = sign * B[:, 0] / n1
    r2 = sign * B[:, 1] / n2
    t = sign * t
    r3 = np.cross(r1, r2)
    R = geometry.project_to_rotation(np.column_stack([r1, r2, r3]))
    return R, t


def refine_pose(
    K: CameraIntrinsics,
    d: DistortionCoefficients,
    R_init: RotationMatrix,
    t_init: np.ndarray,
    points: list[PlanarCorrespondence],
    settings: LMSettings | None = None,
) -> AttitudeResult:
    """LM over rotation and translation only, plain squared reprojection cost.

    Intrinsics and distortion stay frozen. The result carries the reference
    attitude R_r, which under the rig's frame parallelism equals the
    target-to-camera rotation, and its Euler-angle form.
    """
    settings = settings if settings is not None else LMSettings()
    pts3 = np.array([p.point3 for p in points])
    pixels = np.array([p.pixel for p in points])
    fixed = np.array([K.fx, K.fy, K.u0, K.v0, d.k1, d.k2])

    def fun(x):
        full = np.concatenate([fixed, x])
        ev = camera_residual_jacobian(pts3, pixels, full)
        if ev is None:
            return None
        e, J = ev
        return e, J[:, 6:12]

    r0 = geometry.matrix_to_axis_angle(geometry.project_to_rotation(R_init))
    x0 = np.concatenate([r0, np.asarray(t_init, dtype=np.float64)])
    try:
        result = lm_minimize(fun, x0, settings, loss=None)
    except LMInvalidStart as exc:
        raise BehindCamera("initial pose places target points behind the camera") from exc
    if not result.converged:
        raise NotConverged(
            f"pose refinement hit the iteration cap ({settings.max_iterations})",
            result=result,
        )

    R = geometry.axis_angle_to_matrix(geometry.canonical_axis_angle(result.x[:3]))
    t = result.x[3:6].copy()
    pose = PoseRT(R, t)
    corr = [Correspondence(p.id, p.pixel, p.point3) for p in points]
    rms, _, _ = reprojection_stats(
        _PoseOnly(intrinsics=K, distortion=d, pose=pose), corr
    )
    R_r = pose.rotation  # frame parallelism: target rotation IS the attitude
    return AttitudeResult(
        R_t=pose.rotation,
        t_t=t,
        R_r=R_r,
        euler=geometry.matrix_to_euler_xyz(R_r),
        rms_px=rms,
        solver=result,
    )


@dataclass(frozen=True)
class _PoseOnly:
    intrinsics: CameraIntrinsics
    distortion: DistortionCoefficients
    pose: PoseRT


def direction_to_yaw_pitch(v: np.ndarray) -> tuple[float, float]:
    """Yaw/pitch in degrees of a direction in the reference frame."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    yaw = math.degrees(math.atan2(x, z))
    pitch = math.degrees(math.atan2(-y, math.hypot(x, z)))
    return yaw, pitch


def target_direction(
    K: CameraIntrinsics,
    d: DistortionCoefficients,
    R_r: RotationMatrix,
    pixel: np.ndarray,
) -> tuple[float, float]:
    """Reference-frame yaw/pitch of the ray behind an observed pixel.

    Undistorts the pixel, lifts it to the camera-frame ray [x, y, 1], and
    rotates it into the reference frame with R_r^T.
    """
    ideal = geometry.undistort(np.asarray(pixel, dtype=np.float64), K, d)
    xy = geometry.pixel_to_ray(ideal, K)
    ray = np.array([xy[0], xy[1], 1.0])
    v_ref = np.asarray(R_r).T @ ray
    return direction_to_yaw_pitch(v_ref)
