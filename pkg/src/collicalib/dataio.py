"""Dataset, report, and configuration file formats.

All files are line-oriented text: one record per line, first token is the
keyword, remaining tokens are values. Every file starts with a format name
and schema version ("collicalib-dataset 1"). Floats are encoded with
Python's repr, which round-trips float64 exactly, so write -> read is
lossless and identical inputs produce byte-identical files. Reports carry
one isolated `timestamp` line; it is the only line allowed to differ
between reruns with the same inputs and seed.

See docs/formats.md for the complete record reference.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attitude import PlanarCorrespondence
from .dlt import Correspondence
from .errors import ConfigInvalid, DatasetInvalid, DuplicateId
from .geometry import (
    CameraIntrinsics,
    DistortionCoefficients,
    EulerAnglesXYZ,
    PoseRT,
    euler_xyz_to_matrix,
)
from .virtual_points import DepthRange

DATASET_MAGIC = "collicalib-dataset"
REPORT_MAGIC = "collicalib-report"
CONFIG_MAGIC = "collicalib-config"
FIELD_MAGIC = "collicalib-field"
TRUTH_MAGIC = "collicalib-truth"
SCHEMA_VERSION = 1


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_seq(values) -> str:
    return " ".join(_fmt(v) for v in values)


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class _LineReader:
    """Tokenized line iterator with located error reporting."""

    def __init__(self, path: str | Path, magic: str, error_cls):
        self.path = Path(path)
        self.error_cls = error_cls
        self.lineno = 0
        try:
            text = self.path.read_text()
        except OSError as exc:
            raise error_cls(f"{path}: cannot read: {exc}") from exc
        self.lines = text.splitlines()
        header = self._next_tokens()
        if header is None or len(header) != 2 or header[0] != magic:
            raise error_cls(f"{self.path}:1: expected header '{magic} <version>'")
        if header[1] != str(SCHEMA_VERSION):
            raise error_cls(
                f"{self.path}:1: unsupported schema version {header[1]!r} "
                f"(supported: {SCHEMA_VERSION})"
            )
        self._pending = None

    def fail(self, message: str):
        raise self.error_cls(f"{self.path}:{self.lineno}: {message}")

    def _next_tokens(self):
        while self.lineno < len(self.lines):
            line = self.lines[self.lineno]
            self.lineno += 1
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                return stripped.split()
        return None

    def __iter__(self):
        return self

    def __next__(self):
        tokens = self._next_tokens()
        if tokens is None:
            raise StopIteration
        return tokens

    def floats(self, tokens: list[str], n: int, what: str) -> list[float]:
        if len(tokens) != n:
            self.fail(f"{what}: expected {n} values, got {len(tokens)}")
        try:
            return [float(t) for t in tokens]
        except ValueError:
            self.fail(f"{what}: non-numeric value in {tokens}")

    def ints(self, tokens: list[str], n: int, what: str) -> list[int]:
        if len(tokens) != n:
            self.fail(f"{what}: expected {n} values, got {len(tokens)}")
        try:
            return [int(t) for t in tokens]
        except ValueError:
            self.fail(f"{what}: non-integer value in {tokens}")


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

@dataclass
class DatasetFile:
    """In-memory form of a dataset file.

    Records: `point id u v` (bare pixels), `point3 id u v X Y Z`
    (pixel/3-D correspondences), `plane_point id u v Xt Yt` (pixel/reticle
    correspondences). A reference dataset embeds its known camera.
    """

    role: str  # "reference" | "test"
    units: str = "pixels meters"
    seed: int | None = None
    scenario: str | None = None
    image_size: tuple[int, int] | None = None
    depth_range: DepthRange | None = None
    camera: tuple[CameraIntrinsics, DistortionCoefficients] | None = None
    pixels: list[tuple[int, np.ndarray]] = field(default_factory=list)
    control: list[Correspondence] = field(default_factory=list)
    planar: list[PlanarCorrespondence] = field(default_factory=list)


def write_dataset(ds: DatasetFile, path: str | Path) -> None:
    lines = [f"{DATASET_MAGIC} {SCHEMA_VERSION}", f"role {ds.role}", f"units {ds.units}"]
    if ds.seed is not None:
        lines.append(f"seed {ds.seed}")
    if ds.scenario is not None:
        lines.append(f"scenario {ds.scenario}")
    if ds.image_size is not None:
        lines.append(f"image_size {ds.image_size[0]} {ds.image_size[1]}")
    if ds.depth_range is not None:
        lines.append(f"depth_range {_fmt(ds.depth_range.min_m)} {_fmt(ds.depth_range.max_m)}")
    if ds.camera is not None:
        K, d = ds.camera
        lines.append(f"camera {_fmt_seq([K.fx, K.fy, K.u0, K.v0, d.k1, d.k2])}")
    for pid, uv in ds.pixels:
        lines.append(f"point {pid} {_fmt_seq(uv)}")
    for c in ds.control:
        lines.append(f"point3 {c.id} {_fmt_seq(c.pixel)} {_fmt_seq(c.point)}")
    for p in ds.planar:
        lines.append(f"plane_point {p.id} {_fmt_seq(p.pixel)} {_fmt_seq(p.target)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path: str | Path) -> DatasetFile:
    r = _LineReader(path, DATASET_MAGIC, DatasetInvalid)
    ds = DatasetFile(role="")
    seen_ids: dict[str, set] = {"point": set(), "point3": set(), "plane_point": set()}
    for tokens in r:
        key, rest = tokens[0], tokens[1:]
        if key == "role":
            if rest not in (["reference"], ["test"]):
                r.fail(f"role must be 'reference' or 'test', got {rest}")
            ds.role = rest[0]
        elif key == "units":
            ds.units = " ".join(rest)
        elif key == "seed":
            ds.seed = r.ints(rest, 1, "seed")[0]
        elif key == "scenario":
            if len(rest) != 1:
                r.fail("scenario: expected one token")
            ds.scenario = rest[0]
        elif key == "image_size":
            w, h = r.ints(rest, 2, "image_size")
            if w <= 0 or h <= 0:
                r.fail(f"image_size must be positive, got {w} {h}")
            ds.image_size = (w, h)
        elif key == "depth_range":
            lo, hi = r.floats(rest, 2, "depth_range")
            try:
                ds.depth_range = DepthRange(lo, hi)
            except ValueError as exc:
                r.fail(f"depth_range: {exc}")
        elif key == "camera":
            vals = r.floats(rest, 6, "camera")
            try:
                ds.camera = (
                    CameraIntrinsics(*vals[:4]),
                    DistortionCoefficients(*vals[4:]),
                )
            except ValueError as exc:
                r.fail(f"camera: {exc}")
        elif key in ("point", "point3", "plane_point"):
            want = {"point": 3, "point3": 6, "plane_point": 5}[key]
            vals = r.floats(rest, want, key)
            pid = int(vals[0])
            if pid != vals[0]:
                r.fail(f"{key}: id must be an integer, got {rest[0]}")
            if pid in seen_ids[key]:
                raise DuplicateId(f"{r.path}:{r.lineno}: duplicate {key} id {pid}")
            seen_ids[key].add(pid)
            if key == "point":
                ds.pixels.append((pid, np.array(vals[1:3])))
            elif key == "point3":
                ds.control.append(Correspondence(pid, np.array(vals[1:3]), np.array(vals[3:6])))
            else:
                ds.planar.append(PlanarCorrespondence(pid, np.array(vals[1:3]), np.array(vals[3:5])))
        else:
            r.fail(f"unknown record {key!r}")
    if ds.role == "":
        raise DatasetInvalid(f"{r.path}: missing 'role' record")
    return ds


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class SolverSummary:
    iterations: int
    converged: bool
    reason: str
    initial_cost: float
    final_cost: float


@dataclass
class CalibrationReport:
    """Recovered parameters plus reproducibility metadata.

    Every number is recomputable from the inputs and the seed; `timestamp`
    is informational only and excluded from determinism guarantees.
    """

    kind: str  # "camera" | "attitude"
    tool_version: str
    seed: int | None
    rng: str
    inputs: list[tuple[str, str]]  # (filename, sha256)
    cost: str
    intrinsics: CameraIntrinsics
    distortion: DistortionCoefficients
    pose_axis_angle: np.ndarray
    pose_translation: np.ndarray
    euler_deg: tuple[float, float, float]
    rms_px: float
    max_px: float
    solver: SolverSummary
    residuals: list[tuple[int, float]]
    timestamp: str | None = None


def write_report(rep: CalibrationReport, path: str | Path) -> None:
    lines = [
        f"{REPORT_MAGIC} {SCHEMA_VERSION}",
        f"kind {rep.kind}",
        f"tool_version {rep.tool_version}",
    ]
    if rep.timestamp is not None:
        lines.append(f"timestamp {rep.timestamp}")
    if rep.seed is not None:
        lines.append(f"seed {rep.seed}")
    lines.append(f"rng {rep.rng}")
    for name, digest in rep.inputs:
        lines.append(f"input {name} sha256={digest}")
    lines.append(f"cost {rep.cost}")
    K, d = rep.intrinsics, rep.distortion
    lines.append(f"intrinsics {_fmt_seq([K.fx, K.fy, K.u0, K.v0])}")
    lines.append(f"distortion {_fmt_seq([d.k1, d.k2])}")
    lines.append(f"pose_axis_angle {_fmt_seq(rep.pose_axis_angle)}")
    lines.append(f"pose_translation {_fmt_seq(rep.pose_translation)}")
    lines.append(f"pose_euler_deg {_fmt_seq(rep.euler_deg)}")
    lines.append(f"rms_px {_fmt(rep.rms_px)}")
    lines.append(f"max_px {_fmt(rep.max_px)}")
    s = rep.solver
    lines.append(
        f"solver iterations={s.iterations} converged={int(s.converged)} reason={s.reason} "
        f"initial_cost={_fmt(s.initial_cost)} final_cost={_fmt(s.final_cost)}"
    )
    lines.append(f"n_points {len(rep.residuals)}")
    for pid, err in rep.residuals:
        lines.append(f"residual {pid} {_fmt(err)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_report(path: str | Path) -> CalibrationReport:
    r = _LineReader(path, REPORT_MAGIC, DatasetInvalid)
    data: dict = {"inputs": [], "residuals": [], "seed": None, "timestamp": None,
                  "rng": "", "cost": ""}
    for tokens in r:
        key, rest = tokens[0], tokens[1:]
        if key == "kind":
            data["kind"] = rest[0]
        elif key == "tool_version":
            data["tool_version"] = rest[0]
        elif key == "timestamp":
            data["timestamp"] = rest[0]
        elif key == "seed":
            data["seed"] = r.ints(rest, 1, "seed")[0]
        elif key == "rng":
            data["rng"] = rest[0]
        elif key == "input":
            if len(rest) != 2 or not rest[1].startswith("sha256="):
                r.fail("input: expected '<name> sha256=<hex>'")
            data["inputs"].append((rest[0], rest[1].removeprefix("sha256=")))
        elif key == "cost":
            data["cost"] = " ".join(rest)
        elif key == "intrinsics":
            vals = r.floats(rest, 4, "intrinsics")
            data["intrinsics"] = CameraIntrinsics(*vals)
        elif key == "distortion":
            vals = r.floats(rest, 2, "distortion")
            data["distortion"] = DistortionCoefficients(*vals)
        elif key == "pose_axis_angle":
            data["pose_axis_angle"] = np.array(r.floats(rest, 3, key))
        elif key == "pose_translation":
            data["pose_translation"] = np.array(r.floats(rest, 3, key))
        elif key == "pose_euler_deg":
            data["euler_deg"] = tuple(r.floats(rest, 3, key))
        elif key == "rms_px":
            data["rms_px"] = r.floats(rest, 1, key)[0]
        elif key == "max_px":
            data["max_px"] = r.floats(rest, 1, key)[0]
        elif key == "solver":
            kv = dict(t.split("=", 1) for t in rest if "=" in t)
            try:
                data["solver"] = SolverSummary(
                    iterations=int(kv["iterations"]),
                    converged=bool(int(kv["converged"])),
                    reason=kv["reason"],
                    initial_cost=float(kv["initial_cost"]),
                    final_cost=float(kv["final_cost"]),
                )
            except (KeyError, ValueError):
                r.fail(f"solver: malformed summary {rest}")
        elif key == "n_points":
            pass  # redundant with the residual count
        elif key == "residual":
            vals = r.floats(rest, 2, "residual")
            data["residuals"].append((int(vals[0]), vals[1]))
        else:
            r.fail(f"unknown record {key!r}")
    missing = {"kind", "tool_version", "intrinsics", "distortion", "pose_axis_angle",
               "pose_translation", "euler_deg", "rms_px", "max_px", "solver"} - set(data)
    if missing:
        raise DatasetInvalid(f"{r.path}: missing records: {sorted(missing)}")
    return CalibrationReport(**data)


# ---------------------------------------------------------------------------
# Simulation config
# ---------------------------------------------------------------------------

@dataclass
class SimulateConfig:
    """Scenario description for `collicalib simulate`; all fields have defaults."""

    seed: int = 0
    image_size: tuple[int, int] = (1280, 1024)
    reticle_rows: int = 15
    reticle_cols: int = 15
    reticle_pitch_m: float = 0.02
    camera: CameraIntrinsics = CameraIntrinsics(2677.9, 2678.5, 634.66, 524.12)
    distortion: DistortionCoefficients = DistortionCoefficients(-0.2011, 0.1989)
    pose_euler_deg: tuple[float, float, float] = (-1.5324, -0.0632, -0.4851)
    pose_translation: tuple[float, float, float] = (0.10, -0.06, 1.25)
    noise_sigma_px: float = 0.1
    reference_image_size: tuple[int, int] = (2448, 2048)
    reference_camera: CameraIntrinsics = CameraIntrinsics(5967.7, 5969.0, 1222.4, 1023.5)
    reference_distortion: DistortionCoefficients = DistortionCoefficients(0.2380, 2.0007)
    reference_pose_euler_deg: tuple[float, float, float] = (0.0, 0.0, 0.0)
    reference_pose_translation: tuple[float, float, float] = (0.0, 0.0, 1.0)
    reference_noise_sigma_px: float = 0.1
    depth_range: DepthRange = DepthRange(100.0, 1000.0)

    def pose(self) -> PoseRT:
        return PoseRT(
            euler_xyz_to_matrix(EulerAnglesXYZ(*self.pose_euler_deg)),
            np.array(self.pose_translation),
        )

    def reference_pose(self) -> PoseRT:
        return PoseRT(
            euler_xyz_to_matrix(EulerAnglesXYZ(*self.reference_pose_euler_deg)),
            np.array(self.reference_pose_translation),
        )


def read_simulate_config(path: str | Path) -> SimulateConfig:
    r = _LineReader(path, CONFIG_MAGIC, ConfigInvalid)
    cfg = SimulateConfig()
    for tokens in r:
        key, rest = tokens[0], tokens[1:]
        try:
            if key == "seed":
                cfg.seed = r.ints(rest, 1, key)[0]
            elif key == "image_size":
                cfg.image_size = tuple(r.ints(rest, 2, key))
            elif key == "reticle":
                rows, cols = r.ints(rest[:2], 2, key)
                pitch = r.floats(rest[2:], 1, "reticle pitch")[0]
                if rows < 2 or cols < 2:
                    r.fail(f"reticle: rows/cols must be >= 2, got {rows} {cols}")
                if pitch <= 0:
                    r.fail(f"reticle: pitch_m must be positive, got {pitch}")
                cfg.reticle_rows, cfg.reticle_cols, cfg.reticle_pitch_m = rows, cols, pitch
            elif key == "camera":
                cfg.camera = CameraIntrinsics(*r.floats(rest, 4, key))
            elif key == "distortion":
                cfg.distortion = DistortionCoefficients(*r.floats(rest, 2, key))
            elif key == "pose_euler_deg":
                cfg.pose_euler_deg = tuple(r.floats(rest, 3, key))
            elif key == "pose_translation":
                cfg.pose_translation = tuple(r.floats(rest, 3, key))
            elif key == "noise_sigma_px":
                value = r.floats(rest, 1, key)[0]
                if value < 0:
                    r.fail(f"noise_sigma_px must be >= 0, got {value}")
                cfg.noise_sigma_px = value
            elif key == "reference_image_size":
                cfg.reference_image_size = tuple(r.ints(rest, 2, key))
            elif key == "reference_camera":
                cfg.reference_camera = CameraIntrinsics(*r.floats(rest, 4, key))
            elif key == "reference_distortion":
                cfg.reference_distortion = DistortionCoefficients(*r.floats(rest, 2, key))
            elif key == "reference_pose_euler_deg":
                cfg.reference_pose_euler_deg = tuple(r.floats(rest, 3, key))
            elif key == "reference_pose_translation":
                cfg.reference_pose_translation = tuple(r.floats(rest, 3, key))
            elif key == "reference_noise_sigma_px":
                value = r.floats(rest, 1, key)[0]
                if value < 0:
                    r.fail(f"reference_noise_sigma_px must be >= 0, got {value}")
                cfg.reference_noise_sigma_px = value
            elif key == "depth_range":
                lo, hi = r.floats(rest, 2, key)
                cfg.depth_range = DepthRange(lo, hi)
            else:
                r.fail(f"unknown field {key!r}")
        except ValueError as exc:
            r.fail(f"{key}: {exc}")
    return cfg


# ---------------------------------------------------------------------------
# Field-test scenario (for `evaluate`)
# ---------------------------------------------------------------------------

@dataclass
class FieldScenario:
    """Ground-truth description of a far-target observation campaign."""

    target_m: tuple[float, float, float] = (1749.8, 19.3, 3671.8)
    frames: int = 100
    noise_sigma_px: float = 0.1
    image_size: tuple[int, int] = (1280, 1024)
    camera: CameraIntrinsics = CameraIntrinsics(2677.9, 2678.5, 634.66, 524.12)
    distortion: DistortionCoefficients = DistortionCoefficients(-0.2011, 0.1989)
    attitude_euler_deg: tuple[float, float, float] = (-1.5324, -0.0632, -0.4851)
    nominal_focal_mm: float = 12.0
    nominal_pixel_size_um: float = 4.5

    def attitude(self) -> np.ndarray:
        return euler_xyz_to_matrix(EulerAnglesXYZ(*self.attitude_euler_deg))


def read_field_config(path: str | Path) -> FieldScenario:
    r = _LineReader(path, FIELD_MAGIC, ConfigInvalid)
    cfg = FieldScenario()
    for tokens in r:
        key, rest = tokens[0], tokens[1:]
        try:
            if key == "target":
                cfg.target_m = tuple(r.floats(rest, 3, key))
            elif key == "frames":
                cfg.frames = r.ints(rest, 1, key)[0]
                if cfg.frames <= 0:
                    r.fail(f"frames must be positive, got {cfg.frames}")
            elif key == "noise_sigma_px":
                cfg.noise_sigma_px = r.floats(rest, 1, key)[0]
                if cfg.noise_sigma_px < 0:
                    r.fail("noise_sigma_px must be >= 0")
            elif key == "image_size":
                cfg.image_size = tuple(r.ints(rest, 2, key))
            elif key == "camera":
                cfg.camera = CameraIntrinsics(*r.floats(rest, 4, key))
            elif key == "distortion":
                cfg.distortion = DistortionCoefficients(*r.floats(rest, 2, key))
            elif key == "attitude_euler_deg":
                cfg.attitude_euler_deg = tuple(r.floats(rest, 3, key))
            elif key == "nominal_focal_mm":
                cfg.nominal_focal_mm = r.floats(rest, 1, key)[0]
                if cfg.nominal_focal_mm <= 0:
                    r.fail("nominal_focal_mm must be positive")
            elif key == "nominal_pixel_size_um":
                cfg.nominal_pixel_size_um = r.floats(rest, 1, key)[0]
                if cfg.nominal_pixel_size_um <= 0:
                    r.fail("nominal_pixel_size_um must be positive")
            else:
                r.fail(f"unknown field {key!r}")
        except ValueError as exc:
            r.fail(f"{key}: {exc}")
    return cfg


# ---------------------------------------------------------------------------
# Ground-truth sidecar (written by simulate, never read by solver commands)
# ---------------------------------------------------------------------------

@dataclass
class GroundTruth:
    seed: int
    camera: CameraIntrinsics
    distortion: DistortionCoefficients
    relative_pose: PoseRT  # test camera w.r.t. the reference camera frame
    attitude_pose: PoseRT  # target frame -> test camera


def write_truth(truth: GroundTruth, path: str | Path) -> None:
    from . import geometry

    r_rel = geometry.matrix_to_axis_angle(truth.relative_pose.rotation)
    r_att = geometry.matrix_to_axis_angle(truth.attitude_pose.rotation)
    e = geometry.matrix_to_euler_xyz(truth.attitude_pose.rotation)
    lines = [
        f"{TRUTH_MAGIC} {SCHEMA_VERSION}",
        f"seed {truth.seed}",
        f"camera {_fmt_seq([truth.camera.fx, truth.camera.fy, truth.camera.u0, truth.camera.v0])}",
        f"distortion {_fmt_seq([truth.distortion.k1, truth.distortion.k2])}",
        f"relative_pose_axis_angle {_fmt_seq(r_rel)}",
        f"relative_pose_translation {_fmt_seq(truth.relative_pose.translation)}",
        f"attitude_axis_angle {_fmt_seq(r_att)}",
        f"attitude_translation {_fmt_seq(truth.attitude_pose.translation)}",
        f"attitude_euler_deg {_fmt_seq([e.theta_x, e.theta_y, e.theta_z])}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_truth(path: str | Path) -> GroundTruth:
    from . import geometry

    r = _LineReader(path, TRUTH_MAGIC, DatasetInvalid)
    data: dict = {}
    for tokens in r:
        key, rest = tokens[0], tokens[1:]
        if key == "seed":
            data["seed"] = r.ints(rest, 1, key)[0]
        elif key == "camera":
            data["camera"] = CameraIntrinsics(*r.floats(rest, 4, key))
        elif key == "distortion":
            data["distortion"] = DistortionCoefficients(*r.floats(rest, 2, key))
        elif key in ("relative_pose_axis_angle", "relative_pose_translation",
                     "attitude_axis_angle", "attitude_translation"):
            data[key] = np.array(r.floats(rest, 3, key))
        elif key == "attitude_euler_deg":
            pass  # derived from the axis-angle form
        else:
            r.fail(f"unknown record {key!r}")
    return GroundTruth(
        seed=data["seed"],
        camera=data["camera"],
        distortion=data["distortion"],
        relative_pose=PoseRT(
            geometry.axis_angle_to_matrix(data["relative_pose_axis_angle"]),
            data["relative_pose_translation"],
        ),
        attitude_pose=PoseRT(
            geometry.axis_angle_to_matrix(data["attitude_axis_angle"]),
            data["attitude_translation"],
        ),
    )


# ---------------------------------------------------------------------------
# Evaluation report
# ---------------------------------------------------------------------------

@dataclass
class EvaluationRow:
    frame: int
    true_yaw: float
    true_pitch: float
    nominal_yaw: float
    nominal_pitch: float
    calibrated_yaw: float
    calibrated_pitch: float


@dataclass
class EvaluationReport:
    """Truth / nominal-parameters / calibrated comparison for a far target.

    `*_mean` columns are means of absolute differences to the truth over
    frames; `*_std` are standard deviations of the signed differences.
    """

    tool_version: str
    seed: int | None
    inputs: list[tuple[str, str]]
    target_m: tuple[float, float, float]
    rows: list[EvaluationRow]
    nominal_yaw_mean: float
    nominal_yaw_std: float
    nominal_pitch_mean: float
    nominal_pitch_std: float
    calibrated_yaw_mean: float
    calibrated_yaw_std: float
    calibrated_pitch_mean: float
    calibrated_pitch_std: float
    timestamp: str | None = None


def write_evaluation(rep: EvaluationReport, path: str | Path) -> None:
    lines = [
        f"{REPORT_MAGIC} {SCHEMA_VERSION}",
        "kind evaluation",
        f"tool_version {rep.tool_version}",
    ]
    if rep.timestamp is not None:
        lines.append(f"timestamp {rep.timestamp}")
    if rep.seed is not None:
        lines.append(f"seed {rep.seed}")
    for name, digest in rep.inputs:
        lines.append(f"input {name} sha256={digest}")
    lines.append(f"target {_fmt_seq(rep.target_m)}")
    lines.append("columns frame true_yaw true_pitch nominal_yaw nominal_pitch "
                 "calibrated_yaw calibrated_pitch")
    for row in rep.rows:
        lines.append(
            f"row {row.frame} " + _fmt_seq(
                [row.true_yaw, row.true_pitch, row.nominal_yaw, row.nominal_pitch,
                 row.calibrated_yaw, row.calibrated_pitch]
            )
        )
    lines.append(f"nominal_yaw_diff mean={_fmt(rep.nominal_yaw_mean)} std={_fmt(rep.nominal_yaw_std)}")
    lines.append(f"nominal_pitch_diff mean={_fmt(rep.nominal_pitch_mean)} std={_fmt(rep.nominal_pitch_std)}")
    lines.append(
        f"calibrated_yaw_diff mean={_fmt(rep.calibrated_yaw_mean)} std={_fmt(rep.calibrated_yaw_std)}"
    )
    lines.append(
        f"calibrated_pitch_diff mean={_fmt(rep.calibrated_pitch_mean)} std={_fmt(rep.calibrated_pitch_std)}"
    )
    Path(path).write_text("\n".join(lines) + "\n")


def read_evaluation(path: str | Path) -> EvaluationReport:
    r = _LineReader(path, REPORT_MAGIC, DatasetInvalid)
    data: dict = {"inputs": [], "rows": [], "seed": None, "timestamp": None}
    stats: dict[str, tuple[float, float]] = {}
    for tokens in r:
        key, rest = tokens[0], tokens[1:]
        if key == "kind":
            if rest != ["evaluation"]:
                r.fail(f"expected kind evaluation, got {rest}")
        elif key == "tool_version":
            data["tool_version"] = rest[0]
        elif key == "timestamp":
            data["timestamp"] = rest[0]
        elif key == "seed":
            data["seed"] = r.ints(rest, 1, key)[0]
        elif key == "input":
            data["inputs"].append((rest[0], rest[1].removeprefix("sha256=")))
        elif key == "target":
            data["target_m"] = tuple(r.floats(rest, 3, key))
        elif key == "columns":
            pass
        elif key == "row":
            vals = r.floats(rest, 7, key)
            data["rows"].append(EvaluationRow(int(vals[0]), *vals[1:]))
        elif key.endswith("_diff"):
            kv = dict(t.split("=", 1) for t in rest if "=" in t)
            stats[key.removesuffix("_diff")] = (float(kv["mean"]), float(kv["std"]))
        else:
            r.fail(f"unknown record {key!r}")
    for name in ("nominal_yaw", "nominal_pitch", "calibrated_yaw", "calibrated_pitch"):
        if name not in stats:
            raise DatasetInvalid(f"{r.path}: missing {name}_diff summary")
        data[f"{name}_mean"], data[f"{name}_std"] = stats[name]
    return EvaluationReport(**data)
