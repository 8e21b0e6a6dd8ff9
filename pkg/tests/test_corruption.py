import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcrobust.corruption import (
    KINDS,
    CorruptionSpec,
    ProfileError,
    SeverityProfile,
    background_noise,
    beam_deletion,
    corrupt,
    cutout,
    default_profile,
    gaussian_noise_ccs,
    impulse_noise_ccs,
    kind_ordinal,
    layer_deletion,
    local_density_decrease,
    local_density_increase,
    perturb_range,
    uniform_noise_ccs,
    upsample,
)
from pcrobust.corruption.engine import REGISTRY
from pcrobust.pointcloud import EmptyCloudError, PointCloud

import contracts

PROFILE = default_profile()


def cloud_of(n, seed=0, layers=True):
    return contracts.random_cloud(np.random.default_rng(seed), n, layers)


def with_params(kind, **params):
    return PROFILE.merged({kind: params})


# -- spec & profile ------------------------------------------------------------------

def test_spec_validation():
    with pytest.raises(ValueError):
        CorruptionSpec("hail", 1)
    for sev in (0, 6):
        with pytest.raises(ValueError):
            CorruptionSpec("rain", sev)


def test_eighteen_kinds_registered():
    assert len(KINDS) == 18 and set(REGISTRY) == set(KINDS)
    assert sorted(kind_ordinal(k) for k in KINDS) == list(range(18))


def test_default_table_values():
    p = PROFILE
    assert [p.params("gau_noise", s)["sigma"] for s in range(1, 6)] == [0.02, 0.04, 0.06, 0.08, 0.10]
    assert [p.params("imp_noise", s)["fraction"] for s in range(1, 6)] == [0.05, 0.10, 0.15, 0.20, 0.25]
    assert p.params("imp_noise", 3)["magnitude"] == 0.10
    assert [p.params("bg_noise", s)["percent"] for s in range(1, 6)] == [1, 2, 3, 4, 5]
    assert [p.params("layer_del", s)["layers"] for s in range(1, 6)] == [8, 16, 24, 32, 40]
    assert [p.params("beam_del", s)["fraction"] for s in range(1, 6)] == [0.1, 0.2, 0.3, 0.4, 0.5]
    assert p.params("local_dec", 1)["remove_per_cluster"] == 75
    assert p.params("local_inc", 1)["points_per_cluster"] == 80


def test_profile_levels_non_decreasing():
    for kind in KINDS:
        rows = [PROFILE.params(kind, s) for s in range(1, 6)]
        for name in rows[0]:
            vals = [r[name] for r in rows]
            assert vals == sorted(vals), (kind, name)


def test_profile_rejects_bad_tables():
    with pytest.raises(ProfileError):
        SeverityProfile({"gau_noise": {"sigma": [0.1, 0.05, 0.1, 0.1, 0.1]}})
    with pytest.raises(ProfileError):
        SeverityProfile({"gau_noise": {"sigma": [0.1, 0.2]}})
    with pytest.raises(ProfileError):
        SeverityProfile({"hail": {"x": 1}})


def test_profile_yaml_round_trip(tmp_path):
    prof = with_params("gau_noise", sigma=[0.01, 0.02, 0.03, 0.04, 0.05])
    path = tmp_path / "p.yaml"
    prof.save(path)
    assert SeverityProfile.load(path).table == prof.table


def test_partial_profile_merges_over_defaults():
    prof = SeverityProfile.from_yaml("bg_noise:\n  percent: [2, 4, 6, 8, 10]\n")
    assert prof.params("bg_noise", 5)["percent"] == 10
    assert prof.params("gau_noise", 5)["sigma"] == 0.10


def test_overrides_win():
    spec = CorruptionSpec("gau_noise", 1, 0, {"sigma": 0.5})
    assert PROFILE.for_spec(spec)["sigma"] == 0.5


# -- CCS noise ---------------------------------------------------------------------------

def test_gaussian_zero_sigma_identity():
    c = cloud_of(500)
    out = gaussian_noise_ccs(c, CorruptionSpec("gau_noise", 1, 3), with_params("gau_noise", sigma=0.0))
    assert out == c


def test_gaussian_statistics():
    c = PointCloud(np.zeros((100_000, 3)))
    out = gaussian_noise_ccs(c, CorruptionSpec("gau_noise", 1, 11, {"sigma": 0.05}), PROFILE)
    sd = out.xyz.std(axis=0, ddof=1)
    assert np.all((sd >= 0.0475) & (sd <= 0.0525))


def test_uniform_zero_amplitude_identity_and_stats():
    c = PointCloud(np.zeros((100_000, 3)))
    assert uniform_noise_ccs(c, CorruptionSpec("uni_noise", 1, 0, {"amplitude": 0.0}), PROFILE) == c
    out = uniform_noise_ccs(c, CorruptionSpec("uni_noise", 1, 5, {"amplitude": 0.05}), PROFILE)
    assert np.all(np.abs(out.xyz) <= 0.05)
    assert np.all(np.abs(out.xyz.mean(axis=0)) <= 0.001)


def test_impulse_zero_fraction_identity():
    c = cloud_of(300)
    assert impulse_noise_ccs(c, CorruptionSpec("imp_noise", 2, 0, {"fraction": 0.0}), PROFILE) == c


@pytest.mark.parametrize("kind", ["gau_noise", "uni_noise", "gau_noise_rad", "uni_noise_rad"])
def test_displacement_monotone_in_severity(kind):
    c = cloud_of(2000)
    means = []
    for sev in range(1, 6):
        d = [np.linalg.norm(corrupt(c, CorruptionSpec(kind, sev, s)).xyz - c.xyz, axis=1).mean() for s in range(10)]
        means.append(np.mean(d))
    assert all(b >= a for a, b in zip(means, means[1:]))


# -- SCS noise ---------------------------------------------------------------------------

def test_perturb_range_example():
    out = perturb_range(np.array([[3.0, 4.0, 0.0]]), np.array([1.0]))
    assert np.allclose(out, [[3.6, 4.8, 0.0]], atol=1e-15)


def test_perturb_range_clamps_at_origin():
    out = perturb_range(np.array([[0.3, 0.4, 0.0]]), np.array([-2.0]))
    assert np.array_equal(out, [[0.0, 0.0, 0.0]])


def test_perturb_range_zero_delta_is_exact():
    xyz = np.random.default_rng(0).normal(size=(100, 3))
    assert np.array_equal(perturb_range(xyz, np.zeros(100)), xyz)


@pytest.mark.parametrize("kind", ["gau_noise_rad", "uni_noise_rad", "imp_noise_rad"])
def test_scs_zero_strength_identity(kind):
    c = cloud_of(200)
    key = {"gau_noise_rad": "sigma", "uni_noise_rad": "amplitude", "imp_noise_rad": "fraction"}[kind]
    assert corrupt(c, CorruptionSpec(kind, 3, 1, {key: 0.0})) == c


@pytest.mark.parametrize("kind", ["gau_noise_rad", "uni_noise_rad", "imp_noise_rad"])
def test_scs_directions_preserved(kind):
    c = cloud_of(10_000, seed=7)
    out = corrupt(c, CorruptionSpec(kind, 5, 9))
    contracts.assert_unit_direction_kept(c.xyz, out.xyz, 1e-9)


# -- point synthesis ---------------------------------------------------------------------

def test_background_exact_count_and_box():
    c = cloud_of(1000)
    out = background_noise(c, CorruptionSpec("bg_noise", 1, 0, {"count": 100}), PROFILE)
    assert len(out) == 1100
    contracts.assert_prefix(c, out)
    assert np.all(out.intensity[1000:] == 0)


def test_background_zero_identity_and_seed_sensitivity():
    c = cloud_of(400)
    assert background_noise(c, CorruptionSpec("bg_noise", 1, 0, {"count": 0}), PROFILE) == c
    a = background_noise(c, CorruptionSpec("bg_noise", 5, 1), PROFILE)
    b = background_noise(c, CorruptionSpec("bg_noise", 5, 2), PROFILE)
    assert not np.array_equal(a.xyz[400:], b.xyz[400:])


def test_background_empty_cloud():
    with pytest.raises(EmptyCloudError):
        background_noise(PointCloud(np.zeros((0, 3))), CorruptionSpec("bg_noise"), PROFILE)


def test_upsample_zero_identity():
    c = cloud_of(300)
    assert upsample(c, CorruptionSpec("upsample", 1, 0, {"fraction": 0.0}), PROFILE) == c


# -- density -------------------------------------------------------------------------------

def test_local_inc_identity_and_errors():
    c = cloud_of(300)
    assert local_density_increase(c, CorruptionSpec("local_inc", 1, 0, {"clusters": 0}), PROFILE) == c
    with pytest.raises(EmptyCloudError):
        local_density_increase(cloud_of(99), CorruptionSpec("local_inc"), PROFILE)


def test_local_dec_identity_and_errors():
    c = cloud_of(300)
    assert local_density_decrease(c, CorruptionSpec("local_dec", 1, 0, {"clusters": 0}), PROFILE) == c
    with pytest.raises(EmptyCloudError):
        local_density_decrease(cloud_of(99), CorruptionSpec("local_dec"), PROFILE)


def test_cutout_identity_and_errors():
    c = cloud_of(300)
    assert cutout(c, CorruptionSpec("cutout", 1, 0, {"clusters": 0}), PROFILE) == c
    with pytest.raises(EmptyCloudError):
        cutout(cloud_of(19), CorruptionSpec("cutout"), PROFILE)


def test_beam_deletion_bounds():
    c = cloud_of(500)
    assert beam_deletion(c, CorruptionSpec("beam_del", 1, 0, {"fraction": 0.0}), PROFILE) == c
    assert len(beam_deletion(c, CorruptionSpec("beam_del", 1, 0, {"fraction": 1.0}), PROFILE)) == 0
    assert len(beam_deletion(c, CorruptionSpec("beam_del", 3, 0), PROFILE)) == 350


def fan(points_per_layer=20):
    elev = np.linspace(np.deg2rad(-24.8), np.deg2rad(2.0), 64)
    az = np.linspace(-np.pi, np.pi, points_per_layer, endpoint=False)
    e, a = np.meshgrid(elev, az, indexing="ij")
    xyz = np.stack([np.cos(e) * np.cos(a), np.cos(e) * np.sin(a), np.sin(e)], -1).reshape(-1, 3) * 20
    return PointCloud(xyz, layer=np.repeat(np.arange(64), points_per_layer))


def test_layer_deletion_fan():
    out = layer_deletion(fan(), CorruptionSpec("layer_del", 2, 4), PROFILE)
    assert len(np.unique(out.layer)) == 48


def test_layer_deletion_infers_layers():
    c = fan()
    bare = PointCloud(c.xyz)
    out = layer_deletion(bare, CorruptionSpec("layer_del", 2, 4), PROFILE)
    assert out.layer is not None and len(np.unique(out.layer)) == 48
    assert layer_deletion(bare, CorruptionSpec("layer_del", 1, 0, {"layers": 0}), PROFILE).layer is not None
    with pytest.raises(EmptyCloudError):
        layer_deletion(PointCloud(np.zeros((0, 3))), CorruptionSpec("layer_del"), PROFILE)


# -- dispatcher & contracts --------------------------------------------------------------

def test_dispatch_routes_by_kind():
    c = cloud_of(300)
    spec = CorruptionSpec("gau_noise", 2, 5)
    assert corrupt(c, spec) == gaussian_noise_ccs(c, spec, PROFILE)


@pytest.mark.parametrize("kind", KINDS)
def test_smoke_matrix_all_severities(kind):
    c = fan(80)  # 5120-point scan
    for sev in range(1, 6):
        contracts.check(c, kind, sev, sev, PROFILE)


@settings(max_examples=25, deadline=None)
@given(st.integers(100, 3000), st.sampled_from(KINDS), st.integers(1, 5), st.integers(0, 2**63 - 1),
       st.booleans())
def test_contracts_hold_on_random_clouds(n, kind, severity, seed, layers):
    c = contracts.random_cloud(np.random.default_rng(seed % 2**32), n, layers)
    contracts.check(c, kind, severity, seed, PROFILE)
