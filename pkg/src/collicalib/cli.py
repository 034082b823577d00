"""Command-line entry points.

Commands:
    simulate            write synthetic reticle datasets plus a ground-truth
                        sidecar that solver commands never read
    calibrate-camera    single-image camera calibration from a reference and
                        a test dataset (virtual control points + DLT + BA)
    calibrate-attitude  planar attitude calibration from a dataset and a
                        camera report
    evaluate            truth / nominal / calibrated direction comparison
                        for a far-target scenario

Exit codes: 0 success, 1 unexpected error, then one code per error class as
listed in errors.EXIT_CODES (documented in the README).
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, geometry
from .attitude import target_direction
from .bundle import RobustCost
from .dataio import (
    CalibrationReport,
    DatasetFile,
    EvaluationReport,
    EvaluationRow,
    GroundTruth,
    SolverSummary,
    read_dataset,
    read_field_config,
    read_report,
    read_simulate_config,
    sha256_file,
    write_dataset,
    write_evaluation,
    write_report,
    write_truth,
)
from .errors import CalibrationError, DatasetInvalid, exit_code_for
from .geometry import DistortionCoefficients, PoseRT
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
from .virtual_points import RNG_NAME, ReferenceCamera


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def cmd_simulate(args) -> int:
    cfg = read_simulate_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    reticle = ReticleSpec(cfg.reticle_rows, cfg.reticle_cols, cfg.reticle_pitch_m)
    reference = RigScenario(
        intrinsics=cfg.reference_camera,
        distortion=cfg.reference_distortion,
        pose=cfg.reference_pose(),
        reticle=reticle,
        image_width=cfg.reference_image_size[0],
        image_height=cfg.reference_image_size[1],
        noise_sigma_px=cfg.reference_noise_sigma_px,
        seed=derive_seed(seed, "reference-scenario"),
    )
    test = RigScenario(
        intrinsics=cfg.camera,
        distortion=cfg.distortion,
        pose=cfg.pose(),
        reticle=reticle,
        image_width=cfg.image_size[0],
        image_height=cfg.image_size[1],
        noise_sigma_px=cfg.noise_sigma_px,
        seed=derive_seed(seed, "test-scenario"),
    )
    sim = simulate_reticle_observation(
        test,
        reference=reference,
        depth_range=cfg.depth_range,
        depth_seed=derive_seed(seed, "virtual-depths"),
    )

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    scenario_digest = sha256_file(args.config)

    ref_ds = DatasetFile(
        role="reference",
        seed=seed,
        scenario=scenario_digest,
        image_size=cfg.reference_image_size,
        depth_range=cfg.depth_range,
        camera=(cfg.reference_camera, cfg.reference_distortion),
        pixels=sim.reference_observation.observations,
    )
    cam_ds = DatasetFile(
        role="test",
        seed=seed,
        scenario=scenario_digest,
        image_size=cfg.image_size,
        pixels=[(c.id, c.pixel) for c in sim.control],
    )
    att_ds = DatasetFile(
        role="test",
        seed=seed,
        scenario=scenario_digest,
        image_size=cfg.image_size,
        planar=sim.planar,
    )
    truth = GroundTruth(
        seed=seed,
        camera=cfg.camera,
        distortion=cfg.distortion,
        relative_pose=sim.true_relative_pose,
        attitude_pose=test.pose,
    )
    paths = {
        "reference.dataset": lambda p: write_dataset(ref_ds, p),
        "camera.dataset": lambda p: write_dataset(cam_ds, p),
        "attitude.dataset": lambda p: write_dataset(att_ds, p),
        "scenario.truth": lambda p: write_truth(truth, p),
    }
    for name, writer in paths.items():
        writer(out / name)
        print(f"wrote {out / name}")
    return 0


def _pose_report_fields(pose: PoseRT):
    axis_angle = geometry.matrix_to_axis_angle(pose.rotation)
    e = geometry.matrix_to_euler_xyz(pose.rotation)
    return axis_angle, pose.translation, (e.theta_x, e.theta_y, e.theta_z)


def cmd_calibrate_camera(args) -> int:
    ref_ds = read_dataset(args.reference_dataset)
    test_ds = read_dataset(args.test_dataset)
    if ref_ds.role != "reference":
        raise DatasetInvalid(f"{args.reference_dataset}: expected role reference, got {ref_ds.role}")
    if ref_ds.camera is None:
        raise DatasetInvalid(f"{args.reference_dataset}: missing embedded camera parameters")
    if not ref_ds.pixels:
        raise DatasetInvalid(f"{args.reference_dataset}: no point records")
    if not test_ds.pixels:
        raise DatasetInvalid(f"{args.test_dataset}: no point records")
    if test_ds.image_size is None:
        raise DatasetInvalid(f"{args.test_dataset}: missing image_size (needed for the region split)")

    cost = RobustCost(kind=args.cost, huber_delta_px=args.huber_delta)
    result = run_camera_calibration(
        reference_camera=ReferenceCamera(*ref_ds.camera),
        reference_observations=ref_ds.pixels,
        test_observations=test_ds.pixels,
        image_size=test_ds.image_size,
        seed=args.seed,
        depth_range=ref_ds.depth_range,
        cost=cost,
    )
    refined = result.refined
    axis_angle, translation, euler = _pose_report_fields(refined.pose)
    solver = refined.solver
    report = CalibrationReport(
        kind="camera",
        tool_version=__version__,
        seed=args.seed,
        rng=RNG_NAME,
        inputs=[
            (Path(args.reference_dataset).name, sha256_file(args.reference_dataset)),
            (Path(args.test_dataset).name, sha256_file(args.test_dataset)),
        ],
        cost=f"{cost.kind} {cost.huber_delta_px}" if cost.kind == "huber" else cost.kind,
        intrinsics=refined.intrinsics,
        distortion=refined.distortion,
        pose_axis_angle=axis_angle,
        pose_translation=translation,
        euler_deg=euler,
        rms_px=refined.rms_reprojection_px,
        max_px=max(refined.per_point_residuals_px),
        solver=SolverSummary(
            iterations=solver.iterations,
            converged=solver.converged,
            reason=solver.reason,
            initial_cost=solver.initial_cost,
            final_cost=solver.cost,
        ),
        residuals=[
            (c.id, err)
            for c, err in zip(result.correspondences, refined.per_point_residuals_px)
        ],
        timestamp=_timestamp(),
    )
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "camera.report"
    write_report(report, path)
    print(f"wrote {path}")
    print(
        f"camera: fx={refined.intrinsics.fx:.2f} fy={refined.intrinsics.fy:.2f} "
        f"u0={refined.intrinsics.u0:.2f} v0={refined.intrinsics.v0:.2f} "
        f"k1={refined.distortion.k1:.5f} k2={refined.distortion.k2:.5f} "
        f"rms={refined.rms_reprojection_px:.4f}px "
        f"({result.n_central} central / {result.n_edge} edge points)"
    )
    return 0


def cmd_calibrate_attitude(args) -> int:
    ds = read_dataset(args.test_dataset)
    if not ds.planar:
        raise DatasetInvalid(f"{args.test_dataset}: no plane_point records")
    camera_report = read_report(args.camera_report)
    if camera_report.kind != "camera":
        raise DatasetInvalid(f"{args.camera_report}: expected a camera report")
    K = camera_report.intrinsics
    d = camera_report.distortion

    result = run_attitude_calibration(K, d, ds.planar)
    residuals = _attitude_residuals(result, K, d, ds.planar)
    solver = result.solver
    report = CalibrationReport(
        kind="attitude",
        tool_version=__version__,
        seed=args.seed,
        rng=RNG_NAME,
        inputs=[
            (Path(args.test_dataset).name, sha256_file(args.test_dataset)),
            (Path(args.camera_report).name, sha256_file(args.camera_report)),
        ],
        cost="squared",
        intrinsics=K,
        distortion=d,
        pose_axis_angle=geometry.matrix_to_axis_angle(result.R_t),
        pose_translation=result.t_t,
        euler_deg=(result.euler.theta_x, result.euler.theta_y, result.euler.theta_z),
        rms_px=result.rms_px,
        max_px=max(residuals),
        solver=SolverSummary(
            iterations=solver.iterations,
            converged=solver.converged,
            reason=solver.reason,
            initial_cost=solver.initial_cost,
            final_cost=solver.cost,
        ),
        residuals=list(zip([p.id for p in ds.planar], residuals)),
        timestamp=_timestamp(),
    )
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "attitude.report"
    write_report(report, path)
    print(f"wrote {path}")
    e = result.euler
    print(
        f"attitude: theta_x={e.theta_x:.4f} theta_y={e.theta_y:.4f} "
        f"theta_z={e.theta_z:.4f} deg, rms={result.rms_px:.4f}px"
    )
    return 0


def _attitude_residuals(result, K, d, planar) -> list[float]:
    pts3 = np.array([p.point3 for p in planar])
    pixels = np.array([p.pixel for p in planar])
    projected = geometry.project(pts3, PoseRT(result.R_t, result.t_t), K, d)
    return [float(x) for x in np.linalg.norm(pixels - projected, axis=1)]


def cmd_evaluate(args) -> int:
    attitude_report = read_report(args.attitude_report)
    camera_report = read_report(args.camera_report)
    if attitude_report.kind != "attitude":
        raise DatasetInvalid(f"{args.attitude_report}: expected an attitude report")
    if camera_report.kind != "camera":
        raise DatasetInvalid(f"{args.camera_report}: expected a camera report")
    scenario = read_field_config(args.scenario)
    seed = args.seed if args.seed is not None else 0

    R_cal = geometry.axis_angle_to_matrix(attitude_report.pose_axis_angle)
    K_cal = camera_report.intrinsics
    d_cal = camera_report.distortion
    K_nom, d_nom = build_nominal_intrinsics(
        scenario.nominal_focal_mm,
        scenario.nominal_pixel_size_um,
        scenario.image_size[0],
        scenario.image_size[1],
    )
    R_nom = np.eye(3)

    rig = RigScenario(
        intrinsics=scenario.camera,
        distortion=scenario.distortion,
        pose=PoseRT.identity(),
        reticle=ReticleSpec(),
        image_width=scenario.image_size[0],
        image_height=scenario.image_size[1],
        noise_sigma_px=scenario.noise_sigma_px,
        seed=seed,
    )
    target = TargetScenario(
        target_position_m=np.array(scenario.target_m), true_R_r=scenario.attitude()
    )

    rows = []
    for frame in range(scenario.frames):
        (true_yaw, true_pitch), pixel = simulate_field_test(rig, target, frame=frame)
        nom_yaw, nom_pitch = target_direction(K_nom, d_nom, R_nom, pixel)
        cal_yaw, cal_pitch = target_direction(K_cal, d_cal, R_cal, pixel)
        rows.append(EvaluationRow(frame, true_yaw, true_pitch, nom_yaw, nom_pitch,
                                  cal_yaw, cal_pitch))

    def stats(diffs: np.ndarray) -> tuple[float, float]:
        return float(np.mean(np.abs(diffs))), float(np.std(diffs))

    true_yaw = np.array([r.true_yaw for r in rows])
    true_pitch = np.array([r.true_pitch for r in rows])
    nom_yaw_mean, nom_yaw_std = stats(np.array([r.nominal_yaw for r in rows]) - true_yaw)
    nom_pitch_mean, nom_pitch_std = stats(np.array([r.nominal_pitch for r in rows]) - true_pitch)
    cal_yaw_mean, cal_yaw_std = stats(np.array([r.calibrated_yaw for r in rows]) - true_yaw)
    cal_pitch_mean, cal_pitch_std = stats(np.array([r.calibrated_pitch for r in rows]) - true_pitch)

    report = EvaluationReport(
        tool_version=__version__,
        seed=seed,
        inputs=[
            (Path(args.attitude_report).name, sha256_file(args.attitude_report)),
            (Path(args.camera_report).name, sha256_file(args.camera_report)),
            (Path(args.scenario).name, sha256_file(args.scenario)),
        ],
        target_m=scenario.target_m,
        rows=rows,
        nominal_yaw_mean=nom_yaw_mean,
        nominal_yaw_std=nom_yaw_std,
        nominal_pitch_mean=nom_pitch_mean,
        nominal_pitch_std=nom_pitch_std,
        calibrated_yaw_mean=cal_yaw_mean,
        calibrated_yaw_std=cal_yaw_std,
        calibrated_pitch_mean=cal_pitch_mean,
        calibrated_pitch_std=cal_pitch_std,
        timestamp=_timestamp(),
    )
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "evaluation.report"
    write_evaluation(report, path)
    print(f"wrote {path}")
    print(f"{'':12s} {'yaw mean':>10s} {'yaw std':>10s} {'pitch mean':>10s} {'pitch std':>10s}")
    print(f"{'nominal':12s} {nom_yaw_mean:10.4f} {nom_yaw_std:10.4f} "
          f"{nom_pitch_mean:10.4f} {nom_pitch_std:10.4f}")
    print(f"{'calibrated':12s} {cal_yaw_mean:10.4f} {cal_yaw_std:10.4f} "
          f"{cal_pitch_mean:10.4f} {cal_pitch_std:10.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collicalib",
        description="Single-image camera and attitude calibration for collimator rigs.",
    )
    parser.add_argument("--version", action="version", version=f"collicalib {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write synthetic datasets from a scenario config")
    p.add_argument("--config", required=True, help="scenario config file")
    p.add_argument("--output", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate-camera", help="single-image camera calibration")
    p.add_argument("reference_dataset")
    p.add_argument("test_dataset")
    p.add_argument("--seed", type=int, required=True,
                   help="seed for the virtual control point depths")
    p.add_argument("--output", default=".")
    p.add_argument("--cost", choices=["squared", "huber"], default="huber")
    p.add_argument("--huber-delta", type=float, default=1.0, metavar="PX")
    p.set_defaults(func=cmd_calibrate_camera)

    p = sub.add_parser("calibrate-attitude", help="planar attitude calibration")
    p.add_argument("test_dataset")
    p.add_argument("camera_report")
    p.add_argument("--seed", type=int, default=None, help="recorded in the report")
    p.add_argument("--output", default=".")
    p.set_defaults(func=cmd_calibrate_attitude)

    p = sub.add_parser("evaluate", help="truth / nominal / calibrated comparison")
    p.add_argument("attitude_report")
    p.add_argument("camera_report")
    p.add_argument("--scenario", required=True, help="field scenario config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", default=".")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CalibrationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


def entry_point() -> None:
    sys.exit(main())
