"""Closed-form single-image calibration from 2-D/3-D correspondences.

Pipeline: solve the 3x4 projection matrix from the collinearity equations
(an inhomogeneous linear system scaled so the bottom-right entry is the
positive depth component of the translation), decompose it into intrinsics
and extrinsics through the orthonormality of the rotation rows, then fit
the two radial coefficients linearly against points farther from the image
center. Central points are treated as distortion-free for the linear solve;
the nonlinear refinement stage removes that approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import (
    DegenerateConfiguration,
    InsufficientPoints,
    InvalidMatrix,
    RankDeficient,
)
from .geometry import CameraIntrinsics, DistortionCoefficients, PoseRT

MIN_CORRESPONDENCES = 6
_DEGENERACY_SV_RATIO = 1e-10
DEFAULT_CENTRAL_FRACTION = 1.0 / 3.0


@dataclass(frozen=True)
class Correspondence:
    """Observed pixel paired with its 3-D control point."""

    id: int
    pixel: np.ndarray  # (2,) observed (distorted) pixel
    point: np.ndarray  # (3,) meters

    def __post_init__(self):
        object.__setattr__(self, "pixel", np.asarray(self.pixel, dtype=np.float64))
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64))


@dataclass(frozen=True)
class ProjectionMatrix:
    """3x4 projection matrix, scaled so |third rotation row| = 1 and m[2,3] > 0."""

    m: np.ndarray

    @staticmethod
    def from_array(raw: np.ndarray) -> "ProjectionMatrix":
        raw = np.asarray(raw, dtype=np.float64)
        if raw.shape != (3, 4):
            raise ValueError(f"projection matrix must be 3x4, got {raw.shape}")
        scale = np.linalg.norm(raw[2, :3])
        if scale == 0.0:
            raise InvalidMatrix("third row of the projection matrix is zero")
        m = raw / scale
        if m[2, 3] < 0:
            m = -m
        m.setflags(write=False)
        return ProjectionMatrix(m)

    @property
    def row3_norm(self) -> float:
        return float(np.linalg.norm(self.m[2, :3]))


@dataclass(frozen=True)
class InitialCalibration:
    intrinsics: CameraIntrinsics
    distortion: DistortionCoefficients
    pose: PoseRT


def compose_projection(K: CameraIntrinsics, pose: PoseRT) -> ProjectionMatrix:
    """K [R | t] with the canonical scale/sign applied."""
    Rt = np.hstack([pose.rotation, pose.translation[:, None]])
    return ProjectionMatrix.from_array(K.matrix @ Rt)


def _stack_design(points: np.ndarray, pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows of the 2n x 11 system A s = b with s_i = m_i / m_11."""
    n = points.shape[0]
    X, Y, Z = points[:, 0], points[:, 1], points[:, 2]
    u, v = pixels[:, 0], pixels[:, 1]
    A = np.zeros((2 * n, 11))
    A[0::2, 0] = X
    A[0::2, 1] = Y
    A[0::2, 2] = Z
    A[0::2, 3] = 1.0
    A[0::2, 8] = -u * X
    A[0::2, 9] = -u * Y
    A[0::2, 10] = -u * Z
    A[1::2, 4] = X
    A[1::2, 5] = Y
    A[1::2, 6] = Z
    A[1::2, 7] = 1.0
    A[1::2, 8] = -v * X
    A[1::2, 9] = -v * Y
    A[1::2, 10] = -v * Z
    b = np.empty(2 * n)
    b[0::2] = u
    b[1::2] = v
    return A, b


def solve_projection_matrix(correspondences: list[Correspondence]) -> ProjectionMatrix:
    """Least-squares projection matrix from >= 6 non-coplanar correspondences.

    The 3-D points are centroid-shifted and isotropically scaled before the
    solve (plain SVD least squares, not normal equations) and the result is
    mapped back, which only changes the conditioning. The overall scale is
    restored from the unit norm of the third rotation row, with the sign
    fixed by a positive depth component of the translation.
    """
    if len(correspondences) < MIN_CORRESPONDENCES:
        raise InsufficientPoints(
            f"projection solve needs >= {MIN_CORRESPONDENCES} correspondences, "
            f"got {len(correspondences)}"
        )
    points = np.array([c.point for c in correspondences])
    pixels = np.array([c.pixel for c in correspondences])

    centroid = points.mean(axis=0)
    spread = np.sqrt(np.mean(np.sum((points - centroid) ** 2, axis=1)))
    if spread == 0.0:
        raise DegenerateConfiguration("all 3-D points coincide")
    scale = np.sqrt(3.0) / spread
    normalized = (points - centroid) * scale

    A, b = _stack_design(normalized, pixels)
    # Column equilibration: invisible to the solution, keeps the singular
    # value ratio meaningful when pixel magnitudes dwarf the unit columns.
    col_norms = np.linalg.norm(A, axis=0)
    col_norms[col_norms == 0.0] = 1.0
    s_scaled, _, _, sv = np.linalg.lstsq(A / col_norms, b, rcond=None)
    if sv[-1] <= _DEGENERACY_SV_RATIO * sv[0]:
        raise DegenerateConfiguration(
            f"design matrix singular value ratio {sv[-1] / sv[0]:.3e} below "
            f"{_DEGENERACY_SV_RATIO:.0e} (coplanar or otherwise degenerate points)"
        )
    s = s_scaled / col_norms

    m11 = np.sqrt(1.0 / (s[8] ** 2 + s[9] ** 2 + s[10] ** 2))
    M_norm = m11 * np.array(
        [
            [s[0], s[1], s[2], s[3]],
            [s[4], s[5], s[6], s[7]],
            [s[8], s[9], s[10], 1.0],
        ]
    )
    # Undo the 3-D normalization: P_norm = scale * (P - centroid).
    T = np.eye(4)
    T[:3, :3] *= scale
    T[:3, 3] = -scale * centroid
    return ProjectionMatrix.from_array(M_norm @ T)


def projection_residual(M: ProjectionMatrix, correspondences: list[Correspondence]) -> float:
    """Max residual of the raw (unnormalized) scaled linear system.

    Rebuilds the inhomogeneous equations with s_i = m_i / m_11 from the
    original points; used by tests as an independent consistency check.
    """
    points = np.array([c.point for c in correspondences])
    pixels = np.array([c.pixel for c in correspondences])
    A, b = _stack_design(points, pixels)
    s = (M.m / M.m[2, 3]).ravel()[:11]
    return float(np.abs(A @ s - b).max())


def decompose_projection(M: ProjectionMatrix) -> InitialCalibration:
    """Intrinsics and pose from a scale-restored projection matrix.

    Principal point and focal lengths come from dot and cross products of
    the matrix rows with the (unit) third row; the rotation rows recovered
    by back-substitution are projected to the nearest orthonormal matrix.
    Distortion is returned as zero; it is estimated separately.
    """
    m = M.m
    m1, m2, m3 = m[0, :3], m[1, :3], m[2, :3]
    u0 = float(m1 @ m3)
    v0 = float(m2 @ m3)
    fx = float(np.linalg.norm(np.cross(m1, m3)))
    fy = float(np.linalg.norm(np.cross(m2, m3)))
    if fx <= 0.0 or fy <= 0.0:
        raise InvalidMatrix(f"recovered focal lengths must be positive, got ({fx}, {fy})")

    r1 = (m1 - u0 * m3) / fx
    r2 = (m2 - v0 * m3) / fy
    R = geometry.project_to_rotation(np.vstack([r1, r2, m3]))

    tz = float(m[2, 3])
    tx = (float(m[0, 3]) - u0 * tz) / fx
    ty = (float(m[1, 3]) - v0 * tz) / fy

    return InitialCalibration(
        intrinsics=CameraIntrinsics(fx=fx, fy=fy, u0=u0, v0=v0),
        distortion=DistortionCoefficients(0.0, 0.0),
        pose=PoseRT(R, np.array([tx, ty, tz])),
    )


def estimate_initial_distortion(
    correspondences: list[Correspondence], calib: InitialCalibration
) -> DistortionCoefficients:
    """Linear radial-coefficient fit against pinhole projections.

    Projects every 3-D point through the pinhole part of `calib`, then
    solves observed - ideal = (ideal - principal) * (k1 r^2 + k2 r^4) for
    (k1, k2) in the least-squares sense. Needs at least two distinct radii.
    """
    if len(correspondences) < 2:
        raise InsufficientPoints("distortion fit needs at least 2 correspondences")
    points = np.array([c.point for c in correspondences])
    observed = np.array([c.pixel for c in correspondences])
    K = calib.intrinsics

    ideal = geometry.project(points, calib.pose, K, DistortionCoefficients(0.0, 0.0))
    xy = geometry.pixel_to_ray(ideal, K)
    r2 = np.sum(xy * xy, axis=1)
    offset = ideal - K.principal_point

    A = np.empty((2 * len(correspondences), 2))
    A[0::2, 0] = offset[:, 0] * r2
    A[0::2, 1] = offset[:, 0] * r2 * r2
    A[1::2, 0] = offset[:, 1] * r2
    A[1::2, 1] = offset[:, 1] * r2 * r2
    b = (observed - ideal).reshape(-1)

    k, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < 2:
        raise RankDeficient(
            "distortion fit is rank deficient: points share a single radius"
        )
    return DistortionCoefficients(k1=float(k[0]), k2=float(k[1]))


def split_central_edge(
    correspondences: list[Correspondence],
    image_size: tuple[int, int],
    central_fraction: float = DEFAULT_CENTRAL_FRACTION,
) -> tuple[list[Correspondence], list[Correspondence]]:
    """Split by pixel radius from the image center.

    Central = within `central_fraction` of the half-diagonal of the frame,
    measured from the geometric center (the pre-calibration principal-point
    estimate); edge = the rest.
    """
    width, height = image_size
    center = np.array([width / 2.0, height / 2.0])
    radius = central_fraction * 0.5 * float(np.hypot(width, height))
    central, edge = [], []
    for c in correspondences:
        if np.linalg.norm(c.pixel - center) <= radius:
            central.append(c)
        else:
            edge.append(c)
    return central, edge


def calibrate_single_image(
    central: list[Correspondence], edge: list[Correspondence]
) -> InitialCalibration:
    """Closed-form initial calibration: DLT on the central points, then the
    radial fit over central + edge points."""
    M = solve_projection_matrix(central)
    calib = decompose_projection(M)
    distortion = estimate_initial_distortion(central + edge, calib)
    return InitialCalibration(
        intrinsics=calib.intrinsics, distortion=distortion, pose=calib.pose
    )
