import json

import numpy as np
import pytest

from skytrail.synth import (
    NOISE,
    STRUCTURE,
    TARGET,
    NoiseSpec,
    SceneSpec,
    Structure,
    TargetSpec,
    generate,
    path_distance,
    standard_suite,
    suite_scene,
    write_scene,
)


def test_degenerate_spec_one_point_per_frame():
    spec = SceneSpec(seed=1, duration=5.0, noise=NoiseSpec(count=0),
                     target=TargetSpec(hit_prob=1.0, hits_min=1, hits_max=1, sigma=0.0))
    scene = generate(spec)
    cloud = scene.sequence.cloud
    assert np.array_equal(cloud.frame, np.arange(spec.n_frames))
    assert np.abs(path_distance(scene, cloud.xyz, cloud.t)).max() <= 1e-12


def test_same_seed_byte_identical(tmp_path):
    spec = suite_scene("sparse-hits")
    a, b = write_scene(generate(spec), tmp_path / "a"), write_scene(generate(spec), tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()


def test_different_seed_differs():
    spec = suite_scene("sparse-hits")
    other = SceneSpec.from_dict({**spec.to_dict(), "seed": spec.seed + 1})
    assert not generate(spec).sequence.equals(generate(other).sequence)


def test_hit_frames_binomial_bound():
    p, n = 0.4, 600
    spec = SceneSpec(seed=7, duration=30.0, frame_rate=20.0, target=TargetSpec(hit_prob=p), noise=NoiseSpec(count=0))
    scene = generate(spec)
    hit_frames = len(np.unique(scene.sequence.cloud.frame[scene.labels == TARGET]))
    sd = np.sqrt(n * p * (1 - p))
    assert abs(hit_frames - n * p) <= 3 * sd


def test_hits_per_frame_range():
    spec = SceneSpec(seed=8, target=TargetSpec(hit_prob=1.0, hits_min=1, hits_max=5), noise=NoiseSpec(count=0))
    scene = generate(spec)
    per = np.bincount(scene.sequence.cloud.frame, minlength=spec.n_frames)
    assert per.min() >= 1 and per.max() <= 5
    assert set(per) == {1, 2, 3, 4, 5}


def test_suite_names_and_size(suite_scenes):
    names = [s.name for s in standard_suite()]
    assert len(names) >= 4
    assert {"clean-hover", "urban-canyon", "fast-transit", "sparse-hits"} <= set(names)
    assert suite_scene("sparse-hits").target.hit_prob == 0.3
    assert sum(len(s.sequence.cloud) for s in suite_scenes.values()) >= 200_000
    for s in suite_scenes.values():
        assert s.sequence.n == 600


def test_urban_canyon_noise_count_exact(suite_scenes):
    scene = suite_scenes["urban-canyon"]
    per = np.bincount(scene.sequence.cloud.frame[scene.labels == NOISE], minlength=scene.sequence.n)
    assert (per == scene.spec.noise.count).all()
    r = np.linalg.norm(scene.sequence.cloud.xyz[scene.labels == NOISE], axis=1)
    assert r.max() <= 400.0 and r.max() > 300.0


def test_provenance_partition(suite_scenes):
    for scene in suite_scenes.values():
        counts = scene.counts()
        assert counts["structure"] + counts["noise"] + counts["target"] == len(scene.sequence.cloud)
        assert len(scene.labels) == len(scene.sequence.cloud)


def test_target_points_near_gt(suite_scenes):
    for scene in suite_scenes.values():
        cloud = scene.sequence.cloud
        m = scene.labels == TARGET
        d = path_distance(scene, cloud.xyz[m], cloud.t[m])
        assert d.max() <= 3 * scene.spec.target.sigma + 1e-9


def test_gt_at_frame_times(suite_scenes):
    for scene in suite_scenes.values():
        assert np.array_equal(scene.gt.t, scene.sequence.frame_times)


def test_structures_are_stationary():
    spec = SceneSpec(seed=3, structures=(Structure("box", (0.0, 0.0, 5.0), size=(2.0, 2.0, 2.0), jitter=0.0),),
                     target=TargetSpec(hit_prob=0.0), noise=NoiseSpec(count=0))
    xyz = generate(spec).sequence.cloud.xyz
    assert (np.abs(xyz - [0, 0, 5]) <= 1.0 + 1e-12).all()
    # sampled on the surface: at least one coordinate on a face
    on_face = np.isclose(np.abs(xyz - [0, 0, 5]), 1.0).any(axis=1)
    assert on_face.all()


def test_noise_shell_bounds():
    spec = SceneSpec(seed=4, noise=NoiseSpec(count=100, r_min=10.0, r_max=50.0), target=TargetSpec(hit_prob=0.0))
    xyz = generate(spec).sequence.cloud.xyz
    r = np.linalg.norm(xyz, axis=1)
    assert r.min() >= 10.0 and r.max() <= 50.0
    assert (xyz[:, 2] >= 0).all()


@pytest.mark.parametrize(
    "bad",
    [
        {"target": {"hit_prob": 1.5}},
        {"frame_rate": 0},
        {"structures": [{"kind": "cone", "center": [0, 0, 0]}]},
        {"structures": [{"kind": "blob", "center": [0, 0, 0], "points_per_frame": -1}]},
        {"noise": {"count": -3}},
        {"target": {"path": "waypoints", "waypoints": [[0, 0, 0]]}},
        {"colour": "red"},
    ],
)
def test_invalid_specs(bad):
    with pytest.raises((ValueError, TypeError)):
        SceneSpec.from_dict(bad)


def test_spec_json_roundtrip(tmp_path):
    for spec in standard_suite():
        p = tmp_path / f"{spec.name}.json"
        p.write_text(json.dumps(spec.to_dict()))
        assert SceneSpec.load(p) == spec


def test_write_scene_files(tmp_path, suite_scenes):
    from skytrail.ingest import load_ground_truth, load_sequence

    scene = suite_scenes["clean-hover"]
    paths = write_scene(scene, tmp_path, "csv")
    assert load_sequence(paths["sequence"]).equals(scene.sequence)
    assert np.array_equal(load_ground_truth(paths["gt"]).xyz, scene.gt.xyz)
    lines = paths["labels"].read_text().splitlines()
    assert lines[0] == "label,source" and len(lines) == len(scene.labels) + 1
    assert {ln.split(",")[0] for ln in lines[1:]} <= {"structure", "noise", "target"}


def test_waypoint_ping_pong():
    ts = TargetSpec(path="waypoints", waypoints=((0.0, 0.0, 0.0), (10.0, 0.0, 0.0)), speed=1.0)
    assert ts.position(np.array([0.0, 5.0, 10.0, 15.0, 20.0]))[:, 0].tolist() == [0.0, 5.0, 10.0, 5.0, 0.0]


def test_labels_constants():
    assert len({STRUCTURE, NOISE, TARGET}) == 3
