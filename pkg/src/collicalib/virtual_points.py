"""3-D virtual control points from a known camera's reticle observation.

Each observed feature pixel is undistorted, turned into the ray [x, y, 1],
and scaled by a random depth so the point cloud spans a long working range
without any physical 3-D target. The random depth multiplies the
homogeneous ray, so the draw IS the depth coordinate Z (the Euclidean range
is Z * |(x, y, 1)|).

Randomness comes from numpy's seeded PCG64 generator (np.random.default_rng),
so a (observations, range, seed) triple always yields the same points; the
generator name is recorded in reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import DuplicateId, EmptyInput
from .geometry import CameraIntrinsics, DistortionCoefficients

RNG_NAME = "numpy-pcg64"


@dataclass(frozen=True)
class ReferenceCamera:
    """A camera with known intrinsics and distortion."""

    intrinsics: CameraIntrinsics
    distortion: DistortionCoefficients


@dataclass(frozen=True)
class DepthRange:
    """Depth interval in meters for the random scaling."""

    min_m: float = 100.0
    max_m: float = 1000.0

    def __post_init__(self):
        if not (0.0 < self.min_m < self.max_m):
            raise ValueError(f"require 0 < min_m < max_m, got ({self.min_m}, {self.max_m})")


@dataclass(frozen=True)
class VirtualControlPoint:
    id: int
    position: np.ndarray  # (3,) meters, reference-camera frame
    source_pixel: np.ndarray  # (2,) the original observed pixel


def generate_virtual_points(
    ref_cam: ReferenceCamera,
    observations: list[tuple[int, np.ndarray]],
    depth_range: DepthRange,
    seed: int,
) -> list[VirtualControlPoint]:
    """Build one virtual control point per (id, pixel) observation.

    Depths are drawn uniformly over [min_m, max_m] in observation order, so
    the output is a pure function of (inputs, seed).
    """
    if not observations:
        raise EmptyInput("no observations to generate virtual control points from")
    ids = [obs_id for obs_id, _ in observations]
    if len(set(ids)) != len(ids):
        seen: set = set()
        dupes = set()
        for i in ids:
            (dupes if i in seen else seen).add(i)
        raise DuplicateId(f"duplicate feature ids: {sorted(dupes)}")

    pixels = np.array([np.asarray(px, dtype=np.float64) for _, px in observations])
    ideal = geometry.undistort(pixels, ref_cam.intrinsics, ref_cam.distortion)
    rays = geometry.pixel_to_ray(ideal, ref_cam.intrinsics)

    rng = np.random.default_rng(seed)
    depths = rng.uniform(depth_range.min_m, depth_range.max_m, size=len(observations))

    points = []
    for (obs_id, _), pixel, ray, z in zip(observations, pixels, rays, depths):
        position = np.array([ray[0] * z, ray[1] * z, z])
        position.setflags(write=False)
        points.append(VirtualControlPoint(id=obs_id, position=position, source_pixel=pixel))
    return points
