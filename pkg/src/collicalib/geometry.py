"""Rotation algebra, projection, and distortion primitives.

Conventions used throughout the toolkit:

  Camera frame (right-handed, standard computer vision):
    X right, Y down, Z forward along the optical axis. A point is visible
    only if its camera-frame depth Z is positive.

  Pixel frame:
    u = column (right), v = row (down), origin at the top-left corner.

  Point layout:
    Pixel points, normalized image points and 3-D points are numpy arrays
    whose last axis holds the coordinates, so every function here accepts a
    single point (shape (2,) / (3,)) or a batch (shape (n, 2) / (n, 3)) and
    returns the matching shape.

  Rotations:
    RotationMatrix   3x3 orthonormal ndarray, det +1.
    AxisAngle        3-vector; direction = axis, magnitude = angle in
                     radians, canonical magnitude in [0, pi].
    EulerAnglesXYZ   fixed-axis X-Y-Z angles in degrees, i.e.
                     R = Rz(theta_z) @ Ry(theta_y) @ Rx(theta_x).

  Forward camera model (distort direction):
    pinhole pixel   (u~, v~) = (u0 + fx*x, v0 + fy*y) with x = X/Z, y = Y/Z
    radial factor   g = k1*r^2 + k2*r^4 with r^2 = x^2 + y^2 of the IDEAL
                    (undistorted) point
    observed pixel  (u, v) = (u~, v~) + ((u~, v~) - (u0, v0)) * g

    Undistortion inverts this by fixed-point iteration, so
    distort(undistort(p)) == p to the iteration tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, GimbalLock, NonConvergence, NotARotation

# Plain ndarrays; aliases document intent in signatures.
RotationMatrix = np.ndarray  # (3, 3)
AxisAngle = np.ndarray  # (3,)

_ORTHONORMALITY_TOL = 1e-6  # matrix_to_axis_angle rejection threshold
_ROTATION_INVARIANT_TOL = 1e-9  # PoseRT / validate_rotation construction check
_GIMBAL_COS_EPS = 1e-9  # |cos(theta_y)| below this is treated as gimbal lock


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point, all in pixels."""

    fx: float
    fy: float
    u0: float
    v0: float

    def __post_init__(self):
        if not (math.isfinite(self.fx) and self.fx > 0):
            raise ValueError(f"fx must be finite and positive, got {self.fx}")
        if not (math.isfinite(self.fy) and self.fy > 0):
            raise ValueError(f"fy must be finite and positive, got {self.fy}")
        if not (math.isfinite(self.u0) and math.isfinite(self.v0)):
            raise ValueError(f"principal point must be finite, got ({self.u0}, {self.v0})")

    @property
    def matrix(self) -> np.ndarray:
        """3x3 camera matrix K."""
        return np.array(
            [[self.fx, 0.0, self.u0], [0.0, self.fy, self.v0], [0.0, 0.0, 1.0]]
        )

    @property
    def principal_point(self) -> np.ndarray:
        return np.array([self.u0, self.v0])


@dataclass(frozen=True)
class DistortionCoefficients:
    """Radial distortion coefficients; (0, 0) is the ideal pinhole."""

    k1: float = 0.0
    k2: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.k1) and math.isfinite(self.k2)):
            raise ValueError(f"distortion coefficients must be finite, got ({self.k1}, {self.k2})")

    @property
    def is_zero(self) -> bool:
        return self.k1 == 0.0 and self.k2 == 0.0


@dataclass(frozen=True)
class EulerAnglesXYZ:
    """Fixed-axis X-Y-Z angles in degrees, each in (-180, 180]."""

    theta_x: float
    theta_y: float
    theta_z: float

    def __post_init__(self):
        for name, value in (("theta_x", self.theta_x), ("theta_y", self.theta_y),
                            ("theta_z", self.theta_z)):
            if not math.isfinite(value) or not (-180.0 < value <= 180.0):
                raise ValueError(f"{name} must lie in (-180, 180], got {value}")

    def as_array(self) -> np.ndarray:
        return np.array([self.theta_x, self.theta_y, self.theta_z])


def validate_rotation(R: np.ndarray, tol: float = _ROTATION_INVARIANT_TOL) -> np.ndarray:
    """Return R as a float64 (3,3) array, checking orthonormality and det +1."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise NotARotation(f"rotation must be 3x3, got shape {R.shape}")
    err = np.abs(R.T @ R - np.eye(3)).max()
    if err > tol:
        raise NotARotation(f"R^T R deviates from identity by {err:.3e} (tol {tol:.1e})")
    det = np.linalg.det(R)
    if abs(det - 1.0) > tol:
        raise NotARotation(f"det(R) = {det!r}, expected +1")
    return R


class PoseRT:
    """Rigid transform: camera-frame point = rotation @ point + translation.

    The rotation is validated on construction; both arrays are copied and
    frozen so poses behave as immutable values.
    """

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation: np.ndarray, translation: np.ndarray):
        R = validate_rotation(rotation)
        t = np.asarray(translation, dtype=np.float64)
        if t.shape != (3,):
            raise ValueError(f"translation must have shape (3,), got {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValueError("translation must be finite")
        R = R.copy()
        t = t.copy()
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    def __setattr__(self, name, value):
        raise AttributeError("PoseRT is immutable")

    def __repr__(self):
        return f"PoseRT(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"

    @staticmethod
    def identity() -> "PoseRT":
        return PoseRT(np.eye(3), np.zeros(3))

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Apply to points of shape (..., 3)."""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def inverse(self) -> "PoseRT":
        return PoseRT(self.rotation.T, -self.rotation.T @ self.translation)

    def compose(self, inner: "PoseRT") -> "PoseRT":
        """self o inner: first apply `inner`, then `self`."""
        return PoseRT(
            self.rotation @ inner.rotation,
            self.rotation @ inner.translation + self.translation,
        )


def _as_points(p: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    """Coerce to (n, dim) float64; report whether input was a single point."""
    arr = np.asarray(p, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"expected shape (..., {dim}), got {np.shape(p)}")
    return arr, single


def _radial_gain(xy: np.ndarray, d: DistortionCoefficients) -> np.ndarray:
    r2 = np.sum(xy * xy, axis=-1)
    return r2 * (d.k1 + d.k2 * r2)


def distort(ideal: np.ndarray, K: CameraIntrinsics, d: DistortionCoefficients) -> np.ndarray:
    """Map ideal (pinhole) pixels to observed pixels.

    The radial gain uses the ideal point's normalized radius, so the
    principal point is an exact fixed point and d = (0, 0) is the identity.
    """
    pts, single = _as_points(ideal, 2)
    xy = pixel_to_ray(pts, K)
    g = _radial_gain(xy, d)
    out = pts + (pts - K.principal_point) * g[:, None]
    return out[0] if single else out


def undistort(
    observed: np.ndarray,
    K: CameraIntrinsics,
    d: DistortionCoefficients,
    *,
    max_iterations: int = 50,
    tolerance_px: float = 1e-8,
) -> np.ndarray:
    """Invert `distort` by fixed-point iteration.

    Iterates ideal <- observed - offset(ideal) starting from the observed
    point. Each update step equals the current reproduction error, so the
    tolerance bounds |distort(result) - observed|.

    Raises NonConvergence if the cap is hit first (contraction requires the
    radial gain magnitude to stay below 1, true for all supported optics).
    """
    pts, single = _as_points(observed, 2)
    if d.is_zero:
        out = pts.copy()
        return out[0] if single else out
    centre = K.principal_point
    ideal = pts.copy()
    step = math.inf
    for _ in range(max_iterations):
        xy = pixel_to_ray(ideal, K)
        g = _radial_gain(xy, d)
        new = pts - (ideal - centre) * g[:, None]
        step = np.abs(new - ideal).max()
        ideal = new
        if step < tolerance_px:
            return ideal[0] if single else ideal
    raise NonConvergence(
        f"undistortion did not reach {tolerance_px} px within {max_iterations} iterations "
        f"(last step {step:.3e} px)"
    )


def pixel_to_ray(p: np.ndarray, K: CameraIntrinsics) -> np.ndarray:
    """Ideal pixel -> normalized image coordinates (x, y) of the ray [x y 1]."""
    pts, single = _as_points(p, 2)
    xy = np.empty_like(pts)
    xy[:, 0] = (pts[:, 0] - K.u0) / K.fx
    xy[:, 1] = (pts[:, 1] - K.v0) / K.fy
    return xy[0] if single else xy


def ray_to_pixel(xy: np.ndarray, K: CameraIntrinsics) -> np.ndarray:
    """Normalized image coordinates -> ideal pixel (inverse of pixel_to_ray)."""
    pts, single = _as_points(xy, 2)
    uv = np.empty_like(pts)
    uv[:, 0] = K.fx * pts[:, 0] + K.u0
    uv[:, 1] = K.fy * pts[:, 1] + K.v0
    return uv[0] if single else uv


def project_with_depth(
    points: np.ndarray,
    pose: PoseRT,
    K: CameraIntrinsics,
    d: DistortionCoefficients,
) -> tuple[np.ndarray, np.ndarray]:
    """Full forward model, returning (pixels (n, 2), camera depths (n,)).

    Does not reject non-positive depths; callers decide the policy. Pixels
    for such points are meaningless and must not be used.
    """
    pts, _ = _as_points(points, 3)
    cam = pose.transform(pts)
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        xy = cam[:, :2] / z[:, None]
    g = _radial_gain(xy, d)
    uv = ray_to_pixel(xy, K)
    uv = uv + (uv - K.principal_point) * g[:, None]
    return uv, z


def project(
    points: np.ndarray,
    pose: PoseRT,
    K: CameraIntrinsics,
    d: DistortionCoefficients,
) -> np.ndarray:
    """Rigid transform, perspective divide, intrinsics, then distortion.

    Raises BehindCamera if any point has non-positive camera depth.
    """
    pts, single = _as_points(points, 3)
    uv, z = project_with_depth(pts, pose, K, d)
    if np.any(z <= 0):
        bad = np.nonzero(z <= 0)[0]
        raise BehindCamera(f"{bad.size} point(s) at non-positive depth (indices {bad[:10].tolist()})")
    return uv[0] if single else uv


def skew(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix [v]_x with [v]_x w = v x w."""
    v = np.asarray(v, dtype=np.float64)
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def axis_angle_to_matrix(r: AxisAngle) -> RotationMatrix:
    """Rotation matrix from an axis-angle vector.

    R = I + sin(a)/a [r]_x + (1 - cos(a))/a^2 [r]_x^2 with a = |r|; the two
    ratios switch to their series below a small angle, so a -> 0 is exact.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3,):
        raise ValueError(f"axis-angle must have shape (3,), got {r.shape}")
    a2 = float(r @ r)
    a = math.sqrt(a2)
    if a < 1e-4:
        sin_ratio = 1.0 - a2 / 6.0 + a2 * a2 / 120.0
        cos_ratio = 0.5 - a2 / 24.0 + a2 * a2 / 720.0
    else:
        sin_ratio = math.sin(a) / a
        cos_ratio = (1.0 - math.cos(a)) / a2
    S = skew(r)
    return np.eye(3) + sin_ratio * S + cos_ratio * (S @ S)


def canonical_axis_angle(r: AxisAngle) -> AxisAngle:
    """Canonical representative: magnitude in [0, pi].

    Angles above pi wrap to the antipodal axis; at exactly pi the sign is
    fixed so the first nonzero component is positive.
    """
    r = np.asarray(r, dtype=np.float64).copy()
    a = float(np.linalg.norm(r))
    if a == 0.0:
        return r
    angle = math.fmod(a, 2.0 * math.pi)
    if angle < 0.0:
        angle += 2.0 * math.pi
    axis = r / a
    if angle > math.pi:
        angle = 2.0 * math.pi - angle
        axis = -axis
    if angle == math.pi:
        for c in axis:
            if c != 0.0:
                if c < 0.0:
                    axis = -axis
                break
    return axis * angle


def matrix_to_axis_angle(R: RotationMatrix) -> AxisAngle:
    """Canonical axis-angle (magnitude in [0, pi]) of a rotation matrix.

    Uses atan2 of the off-diagonal (sin) and trace (cos) parts, which stays
    accurate over the whole angle range; near pi the axis is recovered from
    the dominant diagonal of (R + I)/2.
    """
    R = validate_rotation(R, tol=_ORTHONORMALITY_TOL)
    # vee(R - R^T)/2 has norm sin(angle) and direction = rotation axis.
    v = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    sin_a = float(np.linalg.norm(v))
    cos_a = float(np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0))
    angle = math.atan2(min(sin_a, 1.0), cos_a)
    if sin_a < 1e-5 and cos_a >= 0.0:
        # Tiny rotation, R ~ I + [r]_x: v is r up to O(angle^3) fixed by the series.
        return v * (1.0 + angle * angle / 6.0)
    if sin_a >= 1e-5:
        return canonical_axis_angle(v / sin_a * angle)
    # Near pi the sin part is too small to carry the axis. The symmetrized
    # (R + I)/2 equals a I + (1 - a) n n^T with a = (1 + cos)/2, so solving
    # for n n^T is exact; the axis comes off its dominant diagonal.
    a = (1.0 + cos_a) / 2.0
    N = ((R + R.T) / 2.0 + np.eye(3)) / 2.0
    M = (N - a * np.eye(3)) / (1.0 - a)
    i = int(np.argmax(np.diag(M)))
    n = np.empty(3)
    n[i] = math.sqrt(max(M[i, i], 0.0))
    for j in range(3):
        if j != i:
            n[j] = M[i, j] / n[i]
    n /= np.linalg.norm(n)
    if sin_a > 0.0 and float(n @ v) < 0.0:
        n = -n  # keep consistency with the sin part while it has a sign
    return canonical_axis_angle(n * angle)


def project_to_rotation(M: np.ndarray) -> RotationMatrix:
    """Nearest rotation matrix (Frobenius) to M, with det +1 enforced."""
    M = np.asarray(M, dtype=np.float64)
    U, _, Vt = np.linalg.svd(M)
    D = np.eye(3)
    D[2, 2] = np.sign(np.linalg.det(U @ Vt))
    return U @ D @ Vt


def euler_xyz_to_matrix(e: EulerAnglesXYZ) -> RotationMatrix:
    """R = Rz(theta_z) @ Ry(theta_y) @ Rx(theta_x), angles in degrees."""
    ax, ay, az = np.radians([e.theta_x, e.theta_y, e.theta_z])
    cx, sx = math.cos(ax), math.sin(ax)
    cy, sy = math.cos(ay), math.sin(ay)
    cz, sz = math.cos(az), math.sin(az)
    Rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    Ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    Rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return Rz @ Ry @ Rx


def matrix_to_euler_xyz(R: RotationMatrix) -> EulerAnglesXYZ:
    """Fixed-axis X-Y-Z angles (degrees) with R = Rz @ Ry @ Rx.

    Raises GimbalLock when |cos(theta_y)| falls below 1e-9 (theta_y within
    numerical reach of +/-90 degrees), where the x/z split is undefined.
    """
    R = validate_rotation(R, tol=_ORTHONORMALITY_TOL)
    cos_y = math.hypot(R[2, 1], R[2, 2])
    if cos_y < _GIMBAL_COS_EPS:
        raise GimbalLock(f"|cos(theta_y)| = {cos_y:.3e}, Euler X-Y-Z split undefined")
    theta_y = math.atan2(-R[2, 0], cos_y)
    theta_x = math.atan2(R[2, 1], R[2, 2])
    theta_z = math.atan2(R[1, 0], R[0, 0])
    return EulerAnglesXYZ(
        theta_x=math.degrees(theta_x),
        theta_y=math.degrees(theta_y),
        theta_z=math.degrees(theta_z),
    )


def rotation_geodesic_distance(R1: RotationMatrix, R2: RotationMatrix) -> float:
    """Angle in radians of the relative rotation R1 R2^T."""
    return float(np.linalg.norm(matrix_to_axis_angle(
        project_to_rotation(np.asarray(R1) @ np.asarray(R2).T))))
