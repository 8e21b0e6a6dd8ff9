"""Robustness sweeps: corrupt a sequence, run the subject, score it.

A sweep is a grid of cells ``(kind, severity, seed)`` plus one clean
baseline per seed.  Cells are independent and may run on a thread pool;
every random draw comes from :func:`derive_frame_seed`, so the report does
not depend on scheduling.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .corruption import KINDS, SEVERITIES, CorruptionSpec, SeverityProfile, corrupt, default_profile, kind_ordinal
from .denoise import BilateralParams, bilateral_filter
from .evaluation import KITTI_LENGTHS, kitti_drift, rpe
from .io import read_kitti_sequence, read_poses, write_kitti_bin
from .odometry import OdometryConfig, run_odometry
from .pointcloud import PointCloud
from .pose import Trajectory
from .seeding import derive_frame_seed
from .synthetic import SCENES, generate_synthetic_sequence

log = logging.getLogger(__name__)

CLEAN = "clean"
CSV_HEADER = ("kind", "severity", "seed", "rpe_trans_m", "rpe_rot_deg", "drift_percent", "flagged", "wall_s")
DEFENSES = ("none", "denoise", "export")
METRICS = ("consecutive", "kitti_segments")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    """Either a synthetic scene (``scene``) or a KITTI sequence (``path`` + ``poses``)."""

    scene: Optional[str] = "corridor"
    frames: int = 50
    scene_seed: int = 0
    path: Optional[str] = None
    poses: Optional[str] = None

    @property
    def is_synthetic(self) -> bool:
        return self.path is None

    def validate(self) -> None:
        if self.is_synthetic:
            if self.scene not in SCENES:
                raise ConfigError(f"unknown synthetic scene {self.scene!r}")
            if self.frames < 2:
                raise ConfigError("dataset.frames must be >= 2")
        elif self.poses is None:
            raise ConfigError("a KITTI dataset needs a ground-truth pose file (dataset.poses)")


@dataclass(frozen=True)
class SubjectConfig:
    """The built-in odometry, or externally computed trajectories.

    ``poses_template`` is formatted with ``kind``, ``severity`` and ``seed``
    (the baseline uses kind ``clean`` and severity 0).
    """

    odometry: OdometryConfig = OdometryConfig()
    poses_template: Optional[str] = None


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = DatasetConfig()
    corruptions: tuple = ()
    severities: tuple = (1, 3, 5)
    seeds: tuple = (0,)
    subject: SubjectConfig = SubjectConfig()
    defense: str = "none"
    bilateral: BilateralParams = BilateralParams()
    export_dir: Optional[str] = None
    metrics: str = "consecutive"
    segment_lengths: tuple = KITTI_LENGTHS
    baseline_only: bool = False
    profile: Optional[str] = None
    output: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        for name in ("corruptions", "severities", "seeds", "segment_lengths"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        self.dataset.validate()
        if not self.corruptions and not self.baseline_only:
            raise ConfigError("no corruptions listed; set baseline_only to run the clean baseline alone")
        bad = [k for k in self.corruptions if k not in KINDS]
        if bad:
            raise ConfigError(f"unknown corruption kinds: {bad}")
        if len(set(self.corruptions)) != len(self.corruptions):
            raise ConfigError("duplicate corruption kinds")
        if not self.severities or any(s not in SEVERITIES for s in self.severities):
            raise ConfigError(f"severities must be a non-empty subset of {SEVERITIES}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.defense not in DEFENSES:
            raise ConfigError(f"defense must be one of {DEFENSES}")
        if self.defense == "export" and not self.export_dir:
            raise ConfigError("defense 'export' needs export_dir")
        if self.metrics not in METRICS:
            raise ConfigError(f"metrics must be one of {METRICS}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    # -- (de)serialization ------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        for k in ("corruptions", "severities", "seeds", "segment_lengths"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        d = dict(d or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "dataset" in d:
                d["dataset"] = DatasetConfig(**(d["dataset"] or {}))
            if "subject" in d:
                sub = dict(d["subject"] or {})
                if "odometry" in sub:
                    sub["odometry"] = OdometryConfig(**(sub["odometry"] or {}))
                d["subject"] = SubjectConfig(**sub)
            if "bilateral" in d:
                d["bilateral"] = BilateralParams(**(d["bilateral"] or {}))
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(yaml.safe_load(text))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_yaml(Path(path).read_text())

    def digest(self) -> str:
        """Hash of the result-relevant settings (threads and output path excluded)."""
        d = self.to_dict()
        d.pop("threads")
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class ReportRow:
    kind: str
    severity: int
    seed: int
    rpe_trans: float = math.nan
    rpe_rot_deg: float = math.nan
    drift_percent: Optional[float] = None
    flagged: int = 0
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def sort_key(self):
        return (-1 if self.kind == CLEAN else kind_ordinal(self.kind), self.severity, self.seed)

    def metrics(self) -> tuple:
        """Everything except wall time, for determinism comparisons."""
        return (self.kind, self.severity, self.seed, self.rpe_trans, self.rpe_rot_deg,
                self.drift_percent, self.flagged, self.error)


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def sort(self) -> "ExperimentReport":
        self.rows.sort(key=ReportRow.sort_key)
        return self

    def baseline(self, seed: Optional[int] = None) -> list[ReportRow]:
        return [r for r in self.rows if r.kind == CLEAN and (seed is None or r.seed == seed)]

    def select(self, kind: str, severity: Optional[int] = None) -> list[ReportRow]:
        return [r for r in self.rows if r.kind == kind and (severity is None or r.severity == severity)]

    def mean_rpe(self, kind: str, severity: Optional[int] = None) -> float:
        vals = [r.rpe_trans for r in self.select(kind, severity) if not r.failed]
        return float(np.mean(vals)) if vals else math.nan

    def to_dict(self) -> dict[str, Any]:
        return {"metadata": dict(self.metadata), "rows": [dataclasses.asdict(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentReport":
        rows = [ReportRow(**{**r, "rpe_trans": _num(r["rpe_trans"]), "rpe_rot_deg": _num(r["rpe_rot_deg"])})
                for r in d.get("rows", [])]
        return cls(rows, dict(d.get("metadata", {})))


def _num(v) -> float:
    return math.nan if v is None else float(v)


# -- data ---------------------------------------------------------------------


@dataclass
class Sequence_:
    frames: list[PointCloud]
    gt: Trajectory


def load_dataset(cfg: DatasetConfig) -> Sequence_:
    if cfg.is_synthetic:
        seq = generate_synthetic_sequence(cfg.scene, cfg.frames, cfg.scene_seed)
        frames = [c for c, _ in seq]
        return Sequence_(frames, Trajectory([c.frame_id for c in frames], [p for _, p in seq]))
    frames = read_kitti_sequence(cfg.path)
    if not frames:
        raise FileNotFoundError(f"no .bin scans in {cfg.path}")
    gt_all = read_poses(cfg.poses)
    gt = Trajectory([f.frame_id for f in frames], [gt_all.pose_at(f.frame_id) for f in frames])
    return Sequence_(frames, gt)


def corrupt_frames(frames: Sequence[PointCloud], kind: str, severity: int, seed: int,
                   profile: Optional[SeverityProfile] = None) -> list[PointCloud]:
    profile = profile or default_profile()
    return [corrupt(f, CorruptionSpec(kind, severity, derive_frame_seed(seed, f.frame_id, kind)), profile)
            for f in frames]


# -- sweep ----------------------------------------------------------------------


def _load_profile(cfg: ExperimentConfig) -> SeverityProfile:
    return SeverityProfile.load(cfg.profile) if cfg.profile else default_profile()


def _estimate(frames: list[PointCloud], cfg: ExperimentConfig, kind: str, severity: int, seed: int) -> Trajectory:
    tpl = cfg.subject.poses_template
    if tpl:
        traj = read_poses(tpl.format(kind=kind, severity=severity, seed=seed), first_frame=frames[0].frame_id)
        return Trajectory([f.frame_id for f in frames], [traj.pose_at(f.frame_id) for f in frames])
    return run_odometry(frames, cfg.subject.odometry)


def _score(row: ReportRow, est: Trajectory, gt: Trajectory, cfg: ExperimentConfig) -> None:
    r = rpe(est, gt)
    row.rpe_trans = r.rpe_trans
    row.rpe_rot_deg = float(np.degrees(r.rpe_rot))
    row.flagged = len(est.flagged)
    if cfg.metrics == "kitti_segments":
        row.drift_percent = kitti_drift(est, gt, cfg.segment_lengths)
    if not (math.isfinite(row.rpe_trans) and math.isfinite(row.rpe_rot_deg)):
        row.error = "non-finite metric"


def run_cell(seq: Sequence_, cfg: ExperimentConfig, kind: str, severity: int, seed: int,
             profile: Optional[SeverityProfile] = None) -> ReportRow:
    """One report row; subject failures are recorded in the row, never raised."""
    row = ReportRow(kind, severity, seed)
    t0 = time.perf_counter()
    try:
        frames = seq.frames if kind == CLEAN else corrupt_frames(seq.frames, kind, severity, seed, profile)
        if cfg.defense == "denoise":
            frames = [bilateral_filter(f, cfg.bilateral) for f in frames]
        _score(row, _estimate(frames, cfg, kind, severity, seed), seq.gt, cfg)
    except Exception as exc:  # recorded per row
        log.warning("%s s%d seed %d failed: %s", kind, severity, seed, exc)
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_time = time.perf_counter() - t0
    return row


def run_experiment(cfg: ExperimentConfig, seq: Optional[Sequence_] = None) -> ExperimentReport:
    seq = seq or load_dataset(cfg.dataset)
    profile = _load_profile(cfg)
    cells = [(CLEAN, 0, s) for s in cfg.seeds]
    if not cfg.baseline_only:
        cells += [(k, sev, s) for k in cfg.corruptions for sev in cfg.severities for s in cfg.seeds]

    if cfg.threads == 1:
        rows = [run_cell(seq, cfg, *c, profile=profile) for c in cells]
    else:
        with ThreadPoolExecutor(cfg.threads) as pool:
            rows = list(pool.map(lambda c: run_cell(seq, cfg, *c, profile=profile), cells))

    if cfg.defense == "export" and not cfg.baseline_only:
        for sev in cfg.severities:
            for s in cfg.seeds:
                out = Path(cfg.export_dir) / f"severity{sev}_seed{s}"
                export_augmentation(seq.frames, cfg.corruptions, sev, s, out, profile)

    report = ExperimentReport(rows, {
        "config_hash": cfg.digest(),
        "version": __version__,
        "frames": len(seq.frames),
        "defense": cfg.defense,
        "metrics": cfg.metrics,
    }).sort()
    if cfg.output:
        fmt = "json" if str(cfg.output).endswith(".json") else "csv"
        write_report(report, cfg.output, fmt)
    return report


# -- augmentation export ------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    frame: int
    kind: str
    severity: int
    seed: int
    path: str
    points: int


def export_augmentation(frames: Sequence[PointCloud], kinds: Sequence[str], severity: int, seed: int,
                        out_dir, profile: Optional[SeverityProfile] = None) -> list[ManifestEntry]:
    """Write corrupted copies as ``out_dir/<kind>/<frame:06d>.bin`` plus ``manifest.json``."""
    out_dir = Path(out_dir)
    manifest = []
    for kind in kinds:
        (out_dir / kind).mkdir(parents=True, exist_ok=True)
        for cloud in corrupt_frames(frames, kind, severity, seed, profile):
            path = out_dir / kind / f"{cloud.frame_id:06d}.bin"
            write_kitti_bin(cloud, path)
            manifest.append(ManifestEntry(cloud.frame_id, kind, severity, seed,
                                          str(path.relative_to(out_dir)), len(cloud)))
    (out_dir / "manifest.json").write_text(json.dumps([dataclasses.asdict(m) for m in manifest], indent=1))
    return manifest


def read_manifest(out_dir) -> list[ManifestEntry]:
    return [ManifestEntry(**m) for m in json.loads((Path(out_dir) / "manifest.json").read_text())]


# -- report output --------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_report(report: ExperimentReport, path, fmt: str = "csv") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path.write_text(json.dumps(report.to_dict(), indent=1, allow_nan=True))
        return
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow([r.kind, r.severity, r.seed, _fmt(r.rpe_trans), _fmt(r.rpe_rot_deg),
                        _fmt(r.drift_percent), r.flagged, f"{r.wall_time:.3f}"])


def read_report(path) -> ExperimentReport:
    path = Path(path)
    if path.suffix == ".json":
        return ExperimentReport.from_dict(json.loads(path.read_text()))
    rows = []
    with path.open(newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(ReportRow(
                rec["kind"], int(rec["severity"]), int(rec["seed"]),
                float(rec["rpe_trans_m"]), float(rec["rpe_rot_deg"]),
                float(rec["drift_percent"]) if rec["drift_percent"] else None,
                int(rec["flagged"]), float(rec["wall_s"]),
            ))
    return ExperimentReport(rows)


def plot_tables(report: ExperimentReport) -> dict[str, np.ndarray]:
    """Per kind: rows of (severity, mean rpe_trans, mean rpe_rot_deg) over seeds.

    Severity 0 carries the clean baseline so every table starts from it.
    """
    base = [r for r in report.baseline() if not r.failed]
    base_row = [0, np.mean([r.rpe_trans for r in base]), np.mean([r.rpe_rot_deg for r in base])] if base else None
    out = {}
    for kind in sorted({r.kind for r in report.rows if r.kind != CLEAN}, key=kind_ordinal):
        table = [base_row] if base_row else []
        for sev in sorted({r.severity for r in report.select(kind)}):
            ok = [r for r in report.select(kind, sev) if not r.failed]
            table.append([sev, np.mean([r.rpe_trans for r in ok]) if ok else np.nan,
                          np.mean([r.rpe_rot_deg for r in ok]) if ok else np.nan])
        out[kind] = np.array(table, dtype=float)
    return out


def emit_plot_data(report: ExperimentReport, out_dir) -> list[Path]:
    """One whitespace-separated ``<kind>.dat`` table per corruption kind."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for kind, table in plot_tables(report).items():
        p = out_dir / f"{kind}.dat"
        np.savetxt(p, table, fmt=["%d", "%.9g", "%.9g"], header="severity rpe_trans_m rpe_rot_deg")
        paths.append(p)
    return paths
