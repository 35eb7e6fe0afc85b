import json

import numpy as np
import pytest

from skytrail.cli import EXIT_ERROR, EXIT_NO_DETECTION, EXIT_OK, main
from skytrail.evaluation import evaluate
from skytrail.geometry import PointCloud
from skytrail.ingest import GroundTruth, SequenceCloud, load_trajectory, save_ground_truth, save_sequence, save_trajectory
from skytrail.synth import write_scene
from skytrail.trajectory import Samples


@pytest.fixture(scope="module")
def hover_dir(tmp_path_factory, suite_scenes):
    out = tmp_path_factory.mktemp("hover")
    write_scene(suite_scenes["clean-hover"], out)
    return out


def test_detect_clean_hover(hover_dir, tmp_path):
    out, rep = tmp_path / "traj.csv", tmp_path / "report.json"
    code = main(["detect", "--input", str(hover_dir / "sequence.bin"), "--timestamps", str(hover_dir / "gt.csv"),
                 "--gt", str(hover_dir / "gt.csv"), "--out", str(out), "--report", str(rep)])
    assert code == EXIT_OK
    report = json.loads(rep.read_text())
    assert report["detected"] is True
    assert report["sda"] == 1.0
    assert report["selected_cluster"] is not None
    assert set(report["timings"]) >= {"denoise", "dbscan", "score", "select", "fit"}
    assert report["cluster_count"] == len(report["breakdowns"])
    assert report["config"]["cluster"]["eps"] == 0.8
    assert report["eval"]["mse"] < 0.5
    assert len(load_trajectory(out)) == 600


def test_detect_config_file_and_flags(hover_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    out = tmp_path / "from_cfg.csv"
    cfg.write_text(json.dumps({"input": str(hover_dir / "sequence.bin"), "output": str(out),
                               "score": {"lambda": 2.0}}))
    rep = tmp_path / "r.json"
    assert main(["detect", "--config", str(cfg), "--set", "score.lambda=0.5", "--report", str(rep)]) == EXIT_OK
    assert out.exists()
    assert json.loads(rep.read_text())["config"]["score"]["lambda"] == 0.5


def test_detect_empty_sequence(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code = main(["detect", "--input", str(empty), "--out", str(tmp_path / "t.csv")])
    assert code == EXIT_ERROR
    assert "empty sequence" in capsys.readouterr().err


def test_detect_unknown_config_key(hover_dir, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"cluster": {"bogus": 1}}))
    code = main(["detect", "--input", str(hover_dir / "sequence.bin"), "--config", str(cfg), "--out", str(tmp_path / "t.csv")])
    assert code == EXIT_ERROR
    assert "unknown config key" in capsys.readouterr().err


def test_detect_no_candidate(tmp_path, capsys):
    # a few isolated MID360 returns: they survive denoising but never cluster
    n = 30
    xyz = np.c_[np.arange(n) * 10.0, np.zeros(n), np.zeros(n)]
    t = np.arange(n) * 0.1
    seq = SequenceCloud(PointCloud(xyz, t, np.ones(n, int), np.arange(n)), t)
    path = tmp_path / "seq.bin"
    save_sequence(seq, path)
    rep = tmp_path / "r.json"
    code = main(["detect", "--input", str(path), "--out", str(tmp_path / "t.csv"), "--report", str(rep)])
    assert code == EXIT_NO_DETECTION
    assert "no candidate trajectory" in capsys.readouterr().err
    report = json.loads(rep.read_text())
    assert report["detected"] is False and report["sda"] == 0.0


def test_bad_threads():
    with pytest.raises(SystemExit):
        main(["detect", "--threads", "0"])


def write_pair(tmp_path, offset):
    t = np.arange(50) * 0.1
    xyz = np.random.default_rng(0).normal(0, 5, (50, 3))
    gt, pred = tmp_path / "gt.csv", tmp_path / "pred.csv"
    save_ground_truth(GroundTruth(t, xyz), gt)
    save_trajectory(Samples(t, xyz + np.asarray(offset), np.ones(50, bool)), pred)
    return pred, gt


def test_eval_identical(tmp_path, capsys):
    pred, gt = write_pair(tmp_path, (0, 0, 0))
    js = tmp_path / "e.json"
    assert main(["eval", "--pred", str(pred), "--gt", str(gt), "--json", str(js)]) == EXIT_OK
    rep = json.loads(js.read_text())
    assert rep["mse"] == 0.0 and rep["sda"] == 1.0
    assert "MSE" in capsys.readouterr().out


def test_eval_offset(tmp_path):
    pred, gt = write_pair(tmp_path, (1.0, 0, 0))
    js = tmp_path / "e.json"
    main(["eval", "--pred", str(pred), "--gt", str(gt), "--json", str(js)])
    assert json.loads(js.read_text())["mse"] == pytest.approx(1.0, abs=1e-9)


def test_eval_random_matches_module(tmp_path, rng):
    t = np.cumsum(rng.uniform(0.01, 0.2, 80))
    g, p = rng.normal(size=(80, 3)), rng.normal(size=(80, 3))
    det = rng.random(80) < 0.8
    save_ground_truth(GroundTruth(t, g), tmp_path / "gt.csv")
    save_trajectory(Samples(t, p, det), tmp_path / "pred.csv")
    js = tmp_path / "e.json"
    main(["eval", "--pred", str(tmp_path / "pred.csv"), "--gt", str(tmp_path / "gt.csv"), "--json", str(js)])
    expect = evaluate(Samples(t, p, det), GroundTruth(t, g)).to_dict()
    got = json.loads(js.read_text())
    assert got == pytest.approx(expect, rel=1e-12)


def test_synth_command(tmp_path, capsys):
    assert main(["synth", "--suite", "sparse-hits", "--out", str(tmp_path), "--format", "csv"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["frames"] == 600
    assert (tmp_path / "sequence.csv").exists() and (tmp_path / "gt.csv").exists()


def test_synth_spec_file_matches_suite(tmp_path, capsys):
    main(["synth", "--suite", "clean-hover", "--out", str(tmp_path / "a")])
    main(["synth", "--spec", str(tmp_path / "a" / "spec.json"), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "sequence.bin").read_bytes() == (tmp_path / "b" / "sequence.bin").read_bytes()


def test_synth_requires_one_source(tmp_path):
    assert main(["synth", "--out", str(tmp_path)]) == EXIT_ERROR


def test_inspect_breakdowns_and_export(hover_dir, tmp_path):
    out, exp = tmp_path / "inspect.json", tmp_path / "clusters"
    code = main(["inspect", "--input", str(hover_dir / "sequence.bin"), "--out", str(out), "--export-dir", str(exp)])
    assert code == EXIT_OK
    payload = json.loads(out.read_text())
    assert len(payload["breakdowns"]) == len(payload["clusters"]) > 0
    for c in payload["clusters"]:
        lines = (exp / f"cluster_{c['id']:04d}.csv").read_text().splitlines()
        assert lines[0] == "frame,t,sensor,x,y,z"
        assert len(lines) - 1 == c["num"]


def test_inspect_empty_scene(tmp_path):
    t = np.arange(5) * 0.1
    path = tmp_path / "empty.csv"
    save_sequence(SequenceCloud(PointCloud.empty(), t), path)
    out = tmp_path / "i.json"
    assert main(["inspect", "--input", str(path), "--out", str(out)]) == EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["clusters"] == [] and payload["breakdowns"] == []
