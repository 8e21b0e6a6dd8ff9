"""Command-line entry point: ``pcrobust <command> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .corruption import KINDS, SeverityProfile, default_profile
from .denoise import BilateralParams, bilateral_filter
from .evaluation import KITTI_LENGTHS, kitti_drift, rpe
from .experiment import (
    ExperimentConfig,
    corrupt_frames,
    emit_plot_data,
    export_augmentation,
    run_experiment,
    write_report,
)
from .io import read_kitti_bin, read_kitti_sequence, read_poses, write_kitti_bin, write_poses
from .odometry import OdometryConfig, run_odometry
from .pose import Trajectory
from .synthetic import SCENES, generate_synthetic_sequence

log = logging.getLogger("pcrobust")


def _frames(path: str):
    p = Path(path)
    if p.is_dir():
        frames = read_kitti_sequence(p)
        if not frames:
            raise SystemExit(f"no .bin scans in {p}")
        return frames, True
    stem = p.stem
    return [read_kitti_bin(p, frame_id=int(stem) if stem.isdigit() else 0)], False


def _write_frames(frames, out: str, as_dir: bool) -> None:
    if as_dir:
        Path(out).mkdir(parents=True, exist_ok=True)
        for f in frames:
            write_kitti_bin(f, Path(out) / f"{f.frame_id:06d}.bin")
    else:
        write_kitti_bin(frames[0], out)


def _profile(args) -> SeverityProfile:
    return SeverityProfile.load(args.profile) if args.profile else default_profile()


def cmd_corrupt(args) -> int:
    if args.print_profile:
        sys.stdout.write(_profile(args).to_yaml())
        return 0
    if not (args.input and args.output and args.kind):
        raise SystemExit("corrupt needs --kind, INPUT and OUTPUT")
    frames, as_dir = _frames(args.input)
    out = corrupt_frames(frames, args.kind, args.severity, args.seed, _profile(args))
    _write_frames(out, args.output, as_dir)
    log.info("wrote %d corrupted frame(s) to %s", len(out), args.output)
    return 0


def cmd_denoise(args) -> int:
    params = BilateralParams(args.radius, args.sigma_d, args.sigma_n, args.iterations, args.normal_k)
    frames, as_dir = _frames(args.input)
    _write_frames([bilateral_filter(f, params) for f in frames], args.output, as_dir)
    return 0


def cmd_odometry(args) -> int:
    cfg = OdometryConfig(voxel_size=args.voxel_size, max_corr_dist=args.max_corr_dist,
                         max_iterations=args.max_iterations, robust_delta=args.robust_delta,
                         refine_corr_dist=None if args.no_refine else args.refine_corr_dist,
                         local_map_frames=args.local_map_frames)
    frames, _ = _frames(args.input)
    traj = run_odometry(frames, cfg)
    write_poses(traj, args.output)
    if traj.flagged:
        log.warning("%d frame(s) fell back to the motion prediction: %s", len(traj.flagged), sorted(traj.flagged))
    return 0


def cmd_evaluate(args) -> int:
    est = read_poses(args.estimate)
    gt = read_poses(args.ground_truth)
    if len(est) != len(gt):
        raise SystemExit(f"trajectory lengths differ ({len(est)} vs {len(gt)})")
    r = rpe(est, gt)
    out = {"pairs": len(r.per_pair), "rpe_trans_m": r.rpe_trans, "rpe_rot_deg": math.degrees(r.rpe_rot)}
    if args.segments:
        out["drift_percent"] = kitti_drift(est, gt, args.lengths)
    print(json.dumps(out, indent=1))
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig(baseline_only=True)
    updates = {}
    if args.seed_given:
        updates["seeds"] = (args.seed,)
    if args.threads:
        updates["threads"] = args.threads
    if args.profile:
        updates["profile"] = args.profile
    if args.output:
        updates["output"] = args.output
    cfg = dataclasses.replace(cfg, **updates)
    if args.print_config:
        sys.stdout.write(cfg.to_yaml())
        return 0
    report = run_experiment(cfg)
    if not cfg.output:
        write_report(report, "/dev/stdout", "csv")
    if args.plot_dir:
        emit_plot_data(report, args.plot_dir)
    failed = sum(r.failed for r in report.rows)
    if failed:
        log.warning("%d row(s) failed; see the report", failed)
    return 0


def cmd_augment(args) -> int:
    frames, _ = _frames(args.input)
    manifest = export_augmentation(frames, args.kinds, args.severity, args.seed, args.output, _profile(args))
    log.info("exported %d frame(s) to %s", len(manifest), args.output)
    return 0


def cmd_synth(args) -> int:
    seq = generate_synthetic_sequence(args.scene, args.frames, args.seed)
    out = Path(args.output)
    _write_frames([c for c, _ in seq], str(out / "velodyne"), True)
    write_poses(Trajectory.from_poses([p for _, p in seq]), out / "poses.txt")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pcrobust", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--seed", type=int, default=None, help="global seed (default 0)")
    p.add_argument("--profile", help="severity profile YAML")
    p.add_argument("--threads", type=int, default=None, help="worker threads for sweeps")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("corrupt", help="corrupt a .bin scan or a directory of scans")
    c.add_argument("input", nargs="?")
    c.add_argument("output", nargs="?")
    c.add_argument("--kind", choices=KINDS)
    c.add_argument("--severity", type=int, default=1, choices=range(1, 6))
    c.add_argument("--print-profile", action="store_true", help="print the effective severity profile")
    c.set_defaults(func=cmd_corrupt)

    d = sub.add_parser("denoise", help="bilateral-filter a scan or a directory of scans")
    d.add_argument("input")
    d.add_argument("output")
    dp = BilateralParams()
    d.add_argument("--radius", type=float, default=dp.radius)
    d.add_argument("--sigma-d", type=float, default=dp.sigma_d)
    d.add_argument("--sigma-n", type=float, default=dp.sigma_n)
    d.add_argument("--iterations", type=int, default=dp.iterations)
    d.add_argument("--normal-k", type=int, default=dp.normal_k)
    d.set_defaults(func=cmd_denoise)

    o = sub.add_parser("odometry", help="estimate poses for a directory of scans")
    o.add_argument("input")
    o.add_argument("output", help="KITTI pose file to write")
    oc = OdometryConfig()
    o.add_argument("--voxel-size", type=float, default=oc.voxel_size)
    o.add_argument("--max-corr-dist", type=float, default=oc.max_corr_dist)
    o.add_argument("--max-iterations", type=int, default=oc.max_iterations)
    o.add_argument("--robust-delta", type=float, default=oc.robust_delta)
    o.add_argument("--refine-corr-dist", type=float, default=oc.refine_corr_dist)
    o.add_argument("--no-refine", action="store_true", help="single fixed-gate pass")
    o.add_argument("--local-map-frames", type=int, default=oc.local_map_frames)
    o.set_defaults(func=cmd_odometry)

    e = sub.add_parser("evaluate", help="RPE (and optional segment drift) of a pose file")
    e.add_argument("estimate")
    e.add_argument("ground_truth")
    e.add_argument("--segments", action="store_true", help="also report KITTI segment drift")
    e.add_argument("--lengths", type=float, nargs="+", default=list(KITTI_LENGTHS))
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="run a corruption sweep from a YAML config")
    x.add_argument("config", nargs="?")
    x.add_argument("--output", help="report path (.csv or .json)")
    x.add_argument("--plot-dir", help="write per-kind plot tables here")
    x.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    x.set_defaults(func=cmd_experiment)

    a = sub.add_parser("augment", help="export corrupted copies of a sequence")
    a.add_argument("input")
    a.add_argument("output")
    a.add_argument("--kinds", nargs="+", choices=KINDS, required=True)
    a.add_argument("--severity", type=int, default=5, choices=range(1, 6))
    a.set_defaults(func=cmd_augment)

    s = sub.add_parser("synth", help="write a synthetic sequence as KITTI files")
    s.add_argument("output")
    s.add_argument("--scene", choices=SCENES, default="corridor")
    s.add_argument("--frames", type=int, default=50)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
