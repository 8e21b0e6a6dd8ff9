import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from pcrobust.evaluation import rotation_angle
from pcrobust.odometry import (
    OdometryConfig,
    RegistrationError,
    huber_weights,
    register,
    run_odometry,
    weighted_rigid_fit,
)
from pcrobust.pointcloud import PointCloud, voxel_downsample
from pcrobust.pose import Pose, compose, inverse, project_to_rotation
from pcrobust.synthetic import CorridorScene


def random_pose(rng, scale=10.0):
    return Pose(Rotation.random(random_state=rng).as_matrix(), rng.normal(0, scale, 3))


def pose_error(a, b):
    e = a.inverse() @ b
    return float(np.linalg.norm(e.translation)), float(np.rad2deg(rotation_angle(e.rotation)))


# -- pose algebra ----------------------------------------------------------------------

def test_identity_and_translation_inverse():
    assert compose(Pose(), Pose()) == Pose()
    assert np.array_equal(inverse(Pose.from_translation((1, -2, 3))).translation, [-1, 2, -3])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_inverse_round_trip(seed):
    p = random_pose(np.random.default_rng(seed), 100.0)
    assert compose(p, inverse(p)).allclose(Pose(), 1e-9)
    assert compose(inverse(p), p).allclose(Pose(), 1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_compose_associative_and_acts_on_points(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_pose(rng) for _ in range(3))
    assert ((a @ b) @ c).allclose(a @ (b @ c), 1e-9)
    x = rng.normal(size=(5, 3))
    assert np.allclose((a @ b).apply(x), a.apply(b.apply(x)), atol=1e-9)


def test_projection_restores_rotation():
    r = Rotation.from_euler("xyz", [0.1, 0.2, 0.3]).as_matrix()
    drifted = r + 1e-4 * np.random.default_rng(0).normal(size=(3, 3))
    assert Pose(project_to_rotation(drifted)).is_valid()
    assert np.allclose(project_to_rotation(r), r, atol=1e-12)


# -- building blocks -------------------------------------------------------------------

def test_huber_weights():
    w = huber_weights(np.array([0.0, 0.5, 1.0, 2.0]), 0.5)
    assert np.allclose(w, [1.0, 1.0, 0.5, 0.25])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rigid_fit_exact(seed):
    rng = np.random.default_rng(seed)
    src = rng.normal(0, 5, (50, 3))
    t = random_pose(rng)
    fit = weighted_rigid_fit(src, t.apply(src), rng.uniform(0.1, 1.0, 50))
    assert fit.allclose(t, 1e-8) and fit.is_valid()


def test_config_validation():
    for kw in ({"voxel_size": 0}, {"max_corr_dist": -1}, {"max_iterations": 0}, {"convergence_eps": 0},
               {"robust_delta": 0}, {"refine_corr_dist": 0.0}, {"local_map_frames": 0}):
        with pytest.raises(ValueError):
            OdometryConfig(**kw)
    assert OdometryConfig.kitti().voxel_size == 1.0
    assert OdometryConfig.frame_to_frame().stages == [(1.0, 0.5)]


# -- register --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def corridor_scan():
    return CorridorScene(seed=0).scan(Pose(), 0)


def test_register_self_is_identity(corridor_scan):
    src = voxel_downsample(corridor_scan, 0.5)
    assert register(src, corridor_scan).allclose(Pose(), 1e-6)


def test_register_recovers_known_perturbation(corridor_scan):
    truth = Pose.from_yaw(np.deg2rad(5.0), (0.3, 0.1, 0.0))
    # target = source moved by truth
    src = voxel_downsample(PointCloud(truth.inverse().apply(corridor_scan.xyz)), 0.5)
    dt, dr = pose_error(truth, register(src, corridor_scan, Pose()))
    assert dt <= 1e-3 and dr <= 0.05


def test_register_too_few_correspondences():
    # sparse source, only five of its points have a target neighbour within the gate
    a = PointCloud(np.column_stack([np.arange(10) * 10.0, np.zeros(10), np.zeros(10)]))
    rng = np.random.default_rng(0)
    b = PointCloud(np.vstack([rng.uniform(500, 501, (45, 3)), a.xyz[:5]]))
    with pytest.raises(RegistrationError) as info:
        register(a, b)
    assert info.value.pose == Pose()


def test_register_too_few_points():
    with pytest.raises(RegistrationError):
        register(PointCloud(np.zeros((9, 3))), PointCloud(np.zeros((100, 3))))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_register_equivariant(seed):
    rng = np.random.default_rng(seed)
    # small structured instance: three orthogonal planes
    g = rng.uniform(0, 4, (300, 2))
    tgt = np.vstack([np.column_stack([g[:100], np.zeros(100)]), np.column_stack([g[100:200, :1], np.zeros(100), g[100:200, 1:]]),
                     np.column_stack([np.zeros(100), g[200:]])])
    truth = Pose(Rotation.from_rotvec(rng.normal(0, 0.03, 3)).as_matrix(), rng.normal(0, 0.1, 3))
    src = truth.inverse().apply(tgt) + rng.normal(0, 0.01, tgt.shape)
    G = random_pose(rng, 50.0)
    p = register(PointCloud(src), PointCloud(tgt))
    q = register(PointCloud(G.apply(src)), PointCloud(G.apply(tgt)))
    assert q.allclose(G @ p @ G.inverse(), 1e-6)


# -- run_odometry ----------------------------------------------------------------------

def test_static_frames_identity(corridor_scan):
    frames = [corridor_scan.replace(frame_id=k) for k in range(4)]
    traj = run_odometry(frames)
    assert all(p.allclose(Pose(), 1e-6) for p in traj.poses)
    assert traj.poses[0] == Pose() and not traj.flagged


def test_needs_two_frames(corridor_scan):
    with pytest.raises(ValueError):
        run_odometry([corridor_scan])


def test_flagged_frames_counted(corridor_scan):
    rng = np.random.default_rng(0)
    junk = [PointCloud(rng.uniform(-1, 1, (5, 3)), frame_id=k) for k in (1, 2)]
    frames = [corridor_scan.replace(frame_id=0), *junk, corridor_scan.replace(frame_id=3)]
    traj = run_odometry(frames)
    assert traj.flagged == {1, 2}
    assert all(p.is_valid() for p in traj.poses)


def test_short_sequence_tracks_and_is_deterministic():
    sc = CorridorScene(seed=1, frames=8)
    gt = sc.poses(8)
    frames = [sc.scan(p, k) for k, p in enumerate(gt)]
    a, b = run_odometry(frames), run_odometry(frames)
    assert all(x == y for x, y in zip(a.poses, b.poses))
    assert all(p.is_valid() for p in a.poses)
    for k in range(1, 8):
        dt, dr = pose_error(gt[k - 1].inverse() @ gt[k], a.poses[k - 1].inverse() @ a.poses[k])
        assert dt < 0.05 and dr < 0.5
