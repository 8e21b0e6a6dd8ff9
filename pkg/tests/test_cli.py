import csv
import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from pcrobust.cli import main
from pcrobust.corruption import CorruptionSpec, corrupt
from pcrobust.experiment import DatasetConfig, ExperimentConfig, corrupt_frames
from pcrobust.io import read_kitti_bin, read_kitti_sequence, read_poses


@pytest.fixture(scope="module")
def synth(tmp_path_factory):
    out = tmp_path_factory.mktemp("seq")
    assert main(["--seed", "2", "synth", str(out), "--frames", "4"]) == 0
    return out


def test_synth_layout(synth):
    assert len(list((synth / "velodyne").glob("*.bin"))) == 4
    assert len(read_poses(synth / "poses.txt")) == 4


def test_corrupt_single_file(synth, tmp_path):
    src = synth / "velodyne" / "000001.bin"
    out = tmp_path / "c.bin"
    assert main(["--seed", "5", "corrupt", str(src), str(out), "--kind", "gau_noise", "--severity", "3"]) == 0
    expected = corrupt_frames([read_kitti_bin(src, 1)], "gau_noise", 3, 5)[0]
    assert np.array_equal(read_kitti_bin(out).xyz, expected.xyz.astype(np.float32))


def test_corrupt_directory(synth, tmp_path):
    assert main(["corrupt", str(synth / "velodyne"), str(tmp_path), "--kind", "beam_del"]) == 0
    assert [len(c) for c in read_kitti_sequence(tmp_path)] == \
        [len(corrupt(c, CorruptionSpec("beam_del", 1, 0))) for c in read_kitti_sequence(synth / "velodyne")]


def test_print_profile(capsys, tmp_path):
    assert main(["corrupt", "--print-profile"]) == 0
    table = yaml.safe_load(capsys.readouterr().out)
    assert table["gau_noise"]["sigma"] == [0.02, 0.04, 0.06, 0.08, 0.10]
    p = tmp_path / "p.yaml"
    p.write_text("gau_noise:\n  sigma: [0.1, 0.1, 0.1, 0.1, 0.1]\n")
    main(["--profile", str(p), "corrupt", "--print-profile"])
    assert yaml.safe_load(capsys.readouterr().out)["gau_noise"]["sigma"][0] == 0.1


def test_corrupt_needs_kind(synth):
    with pytest.raises(SystemExit):
        main(["corrupt", str(synth / "velodyne"), "/tmp/x"])


def test_denoise(synth, tmp_path):
    assert main(["denoise", str(synth / "velodyne" / "000000.bin"), str(tmp_path / "d.bin")]) == 0
    assert len(read_kitti_bin(tmp_path / "d.bin")) == len(read_kitti_bin(synth / "velodyne" / "000000.bin"))


def test_odometry_and_evaluate(synth, tmp_path, capsys):
    est = tmp_path / "est.txt"
    assert main(["odometry", str(synth / "velodyne"), str(est)]) == 0
    assert len(read_poses(est)) == 4
    capsys.readouterr()
    assert main(["evaluate", str(est), str(synth / "poses.txt")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pairs"] == 3 and out["rpe_trans_m"] < 0.05


def test_evaluate_segments(synth, capsys):
    gt = str(synth / "poses.txt")
    assert main(["evaluate", gt, gt, "--segments", "--lengths", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["rpe_trans_m"] == 0 and out["drift_percent"] == 0


def test_augment(synth, tmp_path):
    assert main(["augment", str(synth / "velodyne"), str(tmp_path), "--kinds", "fog", "rain"]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest) == 8 and {m["severity"] for m in manifest} == {5}


def test_experiment_print_config(capsys, tmp_path):
    cfg = ExperimentConfig(dataset=DatasetConfig(frames=3), corruptions=("rain",), severities=(1,))
    p = tmp_path / "e.yaml"
    p.write_text(cfg.to_yaml())
    assert main(["--seed", "4", "--threads", "2", "experiment", str(p), "--print-config"]) == 0
    shown = ExperimentConfig.from_yaml(capsys.readouterr().out)
    assert shown.seeds == (4,) and shown.threads == 2 and shown.corruptions == ("rain",)
    # every field is printed, defaults included
    assert set(yaml.safe_load(cfg.to_yaml())) == {f for f in ExperimentConfig.__dataclass_fields__}


def test_experiment_run(tmp_path):
    cfg = ExperimentConfig(dataset=DatasetConfig(frames=3), corruptions=("gau_noise",), severities=(1,))
    p = tmp_path / "e.yaml"
    p.write_text(cfg.to_yaml())
    report = tmp_path / "r.csv"
    assert main(["experiment", str(p), "--output", str(report), "--plot-dir", str(tmp_path / "plots")]) == 0
    with report.open() as fh:
        assert len(list(csv.reader(fh))) == 3
    assert (tmp_path / "plots" / "gau_noise.dat").exists()


def test_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "pcrobust.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("corrupt", "denoise", "odometry", "evaluate", "experiment", "augment", "synth"):
        assert cmd in res.stdout
