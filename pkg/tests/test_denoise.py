import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_cloud
from oracles import brute_neighbor_counts
from skytrail.denoise import DenoiseParams, density_filter, superimpose
from skytrail.geometry import PointCloud, Sensor
from skytrail.ingest import SequenceCloud


def blob_with_outlier(outlier_sensor):
    xyz = np.vstack([np.zeros((10, 3)) + np.linspace(0, 0.5, 10)[:, None], [[100.0, 0, 0]]])
    sensors = [Sensor.AVIA] * 10 + [outlier_sensor]
    return make_cloud(xyz, sensor=np.array(sensors))


def test_superimpose_concatenates():
    frames = [0, 0, 2, 2, 2, 2, 2]
    cloud = make_cloud(np.arange(21.0).reshape(7, 3), frames=frames)
    seq = SequenceCloud(cloud, [0.0, 0.1, 0.2])
    out = superimpose(seq)
    assert len(out) == 7
    assert out.equals(cloud)


def test_superimpose_single_frame_identity():
    cloud = make_cloud(np.arange(6.0).reshape(2, 3))
    assert superimpose(SequenceCloud(cloud, [0.0])).equals(cloud)


def test_isolated_avia_removed():
    kept, removed = density_filter(blob_with_outlier(Sensor.AVIA), DenoiseParams(min_neighbors=4))
    assert len(removed) == 1
    assert removed.xyz[0, 0] == 100.0
    assert len(kept) == 10


def test_isolated_mid360_kept():
    kept, removed = density_filter(blob_with_outlier(Sensor.MID360), DenoiseParams(min_neighbors=4))
    assert len(removed) == 0
    assert len(kept) == 11


def test_mid360_points_count_as_neighbors():
    # one AVIA point surrounded by MID360 returns survives
    xyz = np.vstack([[0, 0, 0], np.eye(3) * 0.5, -np.eye(3) * 0.5])
    sensors = np.array([0] + [1] * 6)
    kept, removed = density_filter(make_cloud(xyz, sensor=sensors), DenoiseParams(min_neighbors=6))
    assert len(removed) == 0


def test_empty_input():
    kept, removed = density_filter(PointCloud.empty(), DenoiseParams())
    assert len(kept) == 0 and len(removed) == 0


def test_matches_brute_force(rng):
    xyz = rng.uniform(0, 6, size=(500, 3))
    sensors = rng.integers(0, 2, size=500)
    params = DenoiseParams(radius=1.0, min_neighbors=4)
    kept, removed = density_filter(make_cloud(xyz, sensor=sensors), params)
    counts = brute_neighbor_counts(xyz, 1.0)
    expect_keep = (sensors != int(Sensor.AVIA)) | (counts >= 4)
    assert {tuple(p) for p in kept.xyz} == {tuple(p) for p in xyz[expect_keep]}
    assert len(kept) == expect_keep.sum()


def test_params_validation():
    with pytest.raises(ValueError):
        DenoiseParams(radius=0)
    with pytest.raises(ValueError):
        DenoiseParams(min_neighbors=0)


seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(1, 8))
def test_partition_and_purity(seed, k):
    rng = np.random.default_rng(seed)
    xyz = rng.uniform(0, 4, size=(150, 3))
    cloud = make_cloud(xyz, sensor=rng.integers(0, 2, size=150))
    params = DenoiseParams(radius=0.7, min_neighbors=k)
    kept, removed = density_filter(cloud, params)
    again, _ = density_filter(cloud, params)
    assert again.equals(kept)
    assert len(kept) + len(removed) == len(cloud)
    both = np.vstack([kept.xyz, removed.xyz])
    assert sorted(map(tuple, both)) == sorted(map(tuple, xyz))


@given(seeds, st.integers(1, 6))
def test_raising_min_neighbors_never_grows_kept(seed, k):
    rng = np.random.default_rng(seed)
    cloud = make_cloud(rng.uniform(0, 4, size=(150, 3)))
    a, _ = density_filter(cloud, DenoiseParams(radius=0.7, min_neighbors=k))
    b, _ = density_filter(cloud, DenoiseParams(radius=0.7, min_neighbors=k + 1))
    assert set(map(tuple, b.xyz)) <= set(map(tuple, a.xyz))
