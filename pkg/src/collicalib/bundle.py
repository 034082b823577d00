"""Nonlinear refinement of camera parameters against fixed control points.

Minimizes the robust reprojection cost sum_i rho(|p_i - model(theta, P_i)|^2)
over theta = (fx, fy, u0, v0, k1, k2, axis-angle rotation, translation); the
control points are never adjusted. The model is identical to
geometry.project; Jacobians are analytic, with the rotation block using the
closed-form derivative of R(r) p with respect to the axis-angle vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .dlt import Correspondence, InitialCalibration
from .errors import DivergedBehindCamera, InsufficientPoints, NotConverged
from .geometry import CameraIntrinsics, DistortionCoefficients, PoseRT
from .lm import LMInvalidStart, LMNoValidStep, LMResult, LMSettings, lm_minimize

MIN_REFINE_CORRESPONDENCES = 8  # 12 unknowns, 2 equations per point, with margin

N_CAMERA_PARAMS = 12  # fx fy u0 v0 k1 k2 | rx ry rz | tx ty tz
POSE_SLICE = slice(6, 12)


@dataclass(frozen=True)
class RobustCost:
    """Per-point loss rho over squared residual norms s = |e_i|^2.

    "squared" is rho(s) = s. "huber" is quadratic up to delta pixels of
    residual norm and linear beyond: rho(s) = s for s <= delta^2, else
    2*delta*sqrt(s) - delta^2.
    """

    kind: str = "huber"
    huber_delta_px: float = 1.0

    def __post_init__(self):
        if self.kind not in ("squared", "huber"):
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.kind == "huber" and not self.huber_delta_px > 0:
            raise ValueError("huber_delta_px must be positive")

    def rho(self, s: np.ndarray) -> np.ndarray:
        if self.kind == "squared":
            return s
        d2 = self.huber_delta_px**2
        return np.where(s <= d2, s, 2.0 * self.huber_delta_px * np.sqrt(s) - d2)

    def drho(self, s: np.ndarray) -> np.ndarray:
        if self.kind == "squared":
            return np.ones_like(s)
        d2 = self.huber_delta_px**2
        safe = np.maximum(np.sqrt(s), np.finfo(float).tiny)
        return np.where(s <= d2, 1.0, self.huber_delta_px / safe)


@dataclass(frozen=True)
class RefinedCalibration:
    intrinsics: CameraIntrinsics
    distortion: DistortionCoefficients
    pose: PoseRT
    rms_reprojection_px: float
    per_point_residuals_px: list[float]
    solver: LMResult


def pack_camera_params(calib: InitialCalibration) -> np.ndarray:
    K, d, pose = calib.intrinsics, calib.distortion, calib.pose
    r = geometry.matrix_to_axis_angle(pose.rotation)
    return np.array([K.fx, K.fy, K.u0, K.v0, d.k1, d.k2, *r, *pose.translation])


def unpack_camera_params(x: np.ndarray) -> tuple[CameraIntrinsics, DistortionCoefficients, PoseRT]:
    K = CameraIntrinsics(fx=float(x[0]), fy=float(x[1]), u0=float(x[2]), v0=float(x[3]))
    d = DistortionCoefficients(k1=float(x[4]), k2=float(x[5]))
    R = geometry.axis_angle_to_matrix(geometry.canonical_axis_angle(x[6:9]))
    return K, d, PoseRT(R, x[9:12])


def _rotation_point_jacobian(r: np.ndarray, rotated: np.ndarray) -> np.ndarray:
    """d(R(r) P)/dr for every rotated point; shape (n, 3, 3).

    Closed form: dQ/dr_i = ((r_i [r]_x + [r x ((I - R) e_i)]_x) / |r|^2) Q,
    falling back to -[Q]_x as r -> 0.
    """
    a2 = float(r @ r)
    n = rotated.shape[0]
    out = np.empty((n, 3, 3))
    if a2 < 1e-16:
        # R ~ I: dQ/dr = -[Q]_x.
        out[:, 0, 0] = out[:, 1, 1] = out[:, 2, 2] = 0.0
        out[:, 0, 1] = rotated[:, 2]
        out[:, 0, 2] = -rotated[:, 1]
        out[:, 1, 0] = -rotated[:, 2]
        out[:, 1, 2] = rotated[:, 0]
        out[:, 2, 0] = rotated[:, 1]
        out[:, 2, 1] = -rotated[:, 0]
        return out
    R = geometry.axis_angle_to_matrix(r)
    Sr = geometry.skew(r)
    ImR = np.eye(3) - R
    for i in range(3):
        Ai = (r[i] * Sr + geometry.skew(np.cross(r, ImR[:, i]))) / a2
        out[:, :, i] = rotated @ Ai.T
    return out


def camera_residual_jacobian(
    points: np.ndarray, pixels: np.ndarray, x: np.ndarray
) -> tuple[np.ndarray, np.ndarray] | None:
    """Residuals (2n,) and Jacobian (2n, 12) of observed - model at x.

    Returns None when any point falls to non-positive depth, signalling an
    invalid parameter vector to the optimizer.
    """
    fx, fy, u0, v0, k1, k2 = x[:6]
    r = x[6:9]
    t = x[9:12]
    R = geometry.axis_angle_to_matrix(r)

    rotated = points @ R.T
    cam = rotated + t
    z = cam[:, 2]
    if np.any(z <= 0):
        return None

    xn = cam[:, 0] / z
    yn = cam[:, 1] / z
    rho2 = xn * xn + yn * yn
    g = rho2 * (k1 + k2 * rho2)
    G = 1.0 + g
    h = k1 + 2.0 * k2 * rho2

    u = u0 + fx * xn * G
    v = v0 + fy * yn * G
    n = points.shape[0]
    e = np.empty(2 * n)
    e[0::2] = pixels[:, 0] - u
    e[1::2] = pixels[:, 1] - v

    Jm = np.zeros((2 * n, N_CAMERA_PARAMS))
    # Intrinsics and distortion.
    Jm[0::2, 0] = xn * G
    Jm[1::2, 1] = yn * G
    Jm[0::2, 2] = 1.0
    Jm[1::2, 3] = 1.0
    Jm[0::2, 4] = fx * xn * rho2
    Jm[1::2, 4] = fy * yn * rho2
    Jm[0::2, 5] = fx * xn * rho2 * rho2
    Jm[1::2, 5] = fy * yn * rho2 * rho2

    # Pixel sensitivities to the normalized coordinates.
    du_dx = fx * (G + 2.0 * xn * xn * h)
    du_dy = fx * xn * 2.0 * yn * h
    dv_dx = fy * yn * 2.0 * xn * h
    dv_dy = fy * (G + 2.0 * yn * yn * h)

    # Normalized coordinates to camera-frame point: rows (1/z)[1,0,-x],(1/z)[0,1,-y].
    inv_z = 1.0 / z
    duv_dcam = np.empty((n, 2, 3))
    duv_dcam[:, 0, 0] = du_dx * inv_z
    duv_dcam[:, 0, 1] = du_dy * inv_z
    duv_dcam[:, 0, 2] = -(du_dx * xn + du_dy * yn) * inv_z
    duv_dcam[:, 1, 0] = dv_dx * inv_z
    duv_dcam[:, 1, 1] = dv_dy * inv_z
    duv_dcam[:, 1, 2] = -(dv_dx * xn + dv_dy * yn) * inv_z

    # Translation block: dcam/dt = I.
    Jm[0::2, 9:12] = duv_dcam[:, 0, :]
    Jm[1::2, 9:12] = duv_dcam[:, 1, :]

    # Rotation block through dQ/dr.
    dQ_dr = _rotation_point_jacobian(np.asarray(r, dtype=np.float64), rotated)
    duv_dr = np.einsum("nij,njk->nik", duv_dcam, dQ_dr)
    Jm[0::2, 6:9] = duv_dr[:, 0, :]
    Jm[1::2, 6:9] = duv_dr[:, 1, :]

    return e, -Jm


def refine_camera(
    init: InitialCalibration,
    observations: list[Correspondence],
    cost: RobustCost | None = None,
    settings: LMSettings | None = None,
) -> RefinedCalibration:
    """Refine intrinsics, distortion, and pose by robust LM.

    Control points stay fixed. Raises DivergedBehindCamera when the initial
    pose (or every candidate step) puts points at non-positive depth, and
    NotConverged with diagnostics when the iteration cap is exhausted.
    """
    if len(observations) < MIN_REFINE_CORRESPONDENCES:
        raise InsufficientPoints(
            f"refinement needs >= {MIN_REFINE_CORRESPONDENCES} correspondences, "
            f"got {len(observations)}"
        )
    cost = cost if cost is not None else RobustCost()
    settings = settings if settings is not None else LMSettings()
    points = np.array([c.point for c in observations])
    pixels = np.array([c.pixel for c in observations])

    def fun(x):
        return camera_residual_jacobian(points, pixels, x)

    loss = None if cost.kind == "squared" else cost
    try:
        result = lm_minimize(fun, pack_camera_params(init), settings, loss=loss)
    except LMInvalidStart as exc:
        raise DivergedBehindCamera(
            "initial calibration places control points behind the camera"
        ) from exc
    except LMNoValidStep as exc:
        raise DivergedBehindCamera(str(exc)) from exc
    if not result.converged:
        raise NotConverged(
            f"bundle adjustment hit the iteration cap ({settings.max_iterations}); "
            f"final cost {result.cost:.6g}, gradient {result.gradient_inf_norm:.3g}",
            result=result,
        )

    K, d, pose = unpack_camera_params(result.x)
    refined = InitialCalibration(intrinsics=K, distortion=d, pose=pose)
    rms, _, per_point = reprojection_stats(refined, observations)
    return RefinedCalibration(
        intrinsics=K,
        distortion=d,
        pose=pose,
        rms_reprojection_px=rms,
        per_point_residuals_px=per_point,
        solver=result,
    )


def reprojection_stats(calib, observations: list[Correspondence]) -> tuple[float, float, list[float]]:
    """(rms, max, per-point) pixel residual norms through the full model.

    rms is the root of the mean squared 2-D residual norm over points.
    `calib` is anything with intrinsics/distortion/pose attributes.
    """
    points = np.array([c.point for c in observations])
    pixels = np.array([c.pixel for c in observations])
    projected = geometry.project(points, calib.pose, calib.intrinsics, calib.distortion)
    norms = np.linalg.norm(pixels - projected, axis=1)
    rms = float(math.sqrt(float(np.mean(norms**2))))
    return rms, float(norms.max()), [float(x) for x in norms]
