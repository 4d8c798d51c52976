"""Smoke tests for the Python bindings: one probe per exported surface."""

import json
import math

import numpy as np
import pytest

import radarvi


SCENE_CONFIG = {
    "seed": 5,
    "duration": 0.4,
    "frame_rate": 10.0,
    "trajectory": {"type": "constant_velocity", "velocity": [0.4, 0.8, 0.0], "yaw_rate": 0.03},
    "background": {"point_count": 90, "feature_count": 10},
    "objects": [
        {
            "center": [0.0, 9.0, 0.2],
            "velocity": [0.5, 0.1, 0.0],
            "point_count": 30,
            "feature_count": 6,
        }
    ],
    "radar": {
        "spurious_fraction": 0.08,
        "persistence": 0.2,
        "rdm": {
            "enabled": True,
            "range_bins": 32,
            "doppler_bins": 32,
            "range_res": 1.0,
            "doppler_res": 0.25,
        },
    },
    "poses": {"vi_noise_sigma": 0.01, "drift_rate": 0.05},
}


def test_version_and_exports():
    assert radarvi.__version__
    for name in radarvi.__all__:
        assert getattr(radarvi, name) is not None


def test_project_matches_pinhole():
    k = radarvi.CameraIntrinsics(460.0, 460.0, 320.0, 240.0)
    u, v = radarvi.project(k, np.array([1.0, 0.5, 10.0]))
    assert u == pytest.approx(320.0 + 46.0)
    assert v == pytest.approx(240.0 + 23.0)


def test_rigid_transform_roundtrip():
    t = radarvi.RigidTransform(np.eye(3), np.array([1.0, 2.0, 3.0]))
    p = np.array([0.5, -1.0, 4.0])
    assert np.allclose(t.apply(p), p + np.array([1.0, 2.0, 3.0]))
    composed = t * t.inverse()
    assert np.allclose(composed.rotation, np.eye(3))
    assert np.allclose(composed.translation, np.zeros(3))


def test_kabsch_recovers_exact_transform():
    angle = 0.7
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    trans = np.array([0.3, -1.2, 2.0])
    src = [np.array(p, dtype=float) for p in [(0, 0, 0), (1, 0, 0), (0, 2, 0), (0, 0, 3), (1, 1, 1)]]
    dst = [rot @ p + trans for p in src]
    est = radarvi.kabsch(src, dst)
    assert np.allclose(est.rotation, rot, atol=1e-9)
    assert np.allclose(est.translation, trans, atol=1e-9)


def test_transform_consistency_loss_zero_iff_agree():
    t = radarvi.RigidTransform(np.eye(3), np.array([0.1, 0.2, 0.3]))
    pts = [np.array([1.0, 2.0, 3.0]), np.array([-2.0, 0.5, 4.0])]
    assert radarvi.transform_consistency_loss(t, t, pts) == 0.0
    other = radarvi.RigidTransform(np.eye(3), np.array([0.1, 0.2, 0.4]))
    assert radarvi.transform_consistency_loss(other, t, pts) == pytest.approx(0.1)


def test_metrics_basics():
    a = [np.zeros(3), np.array([1.0, 0.0, 0.0])]
    assert radarvi.chamfer(a, a) == 0.0
    b = [np.array([0.0, 0.5, 0.0]), np.array([1.0, 0.5, 0.0])]
    assert radarvi.chamfer(a, b) == pytest.approx(0.5)
    assert radarvi.modified_hausdorff(a, b) == pytest.approx(0.5)
    assert radarvi.rpcdl(b, a, 1.0) == 2
    report = radarvi.evaluate_cloud(b, a, 0.25)
    assert report["clutter_count"] == 2
    assert report["rpcdl"] == 0


def test_cfar_spike_and_alpha():
    assert radarvi.ca_cfar_alpha(16, 1e-2) == pytest.approx(5.336342914613185, abs=1e-12)
    power = np.ones((16, 16))
    power[8, 8] = 10.0
    dets = radarvi.ca_cfar(power, 0.5, 0.25, 1, 2, 1e-2)
    assert len(dets) == 1
    r, d, snr = dets[0]
    assert (r, d) == (8, 8)
    assert snr == pytest.approx(10.0)  # 10 log10(10 / 1)
    dets_os = radarvi.os_cfar(power, 0.5, 0.25, 1, 2, 30, 1e-2)
    assert len(dets_os) == 1


def test_mark_spurious_flags_isolated_point():
    stable = [np.array([5.0 * i, 10.0, 0.0]) for i in range(11)]
    frame0 = [np.array([200.0, 200.0, 0.0])] + stable
    frame1 = list(stable)
    identity = radarvi.RigidTransform()
    flags = radarvi.mark_spurious([frame0, frame1], [], [identity], [0.1], percentile=10.0)
    assert list(flags) == [1] + [0] * 11


def test_triangulate_midpoint_static_point():
    k = radarvi.CameraIntrinsics(460.0, 460.0, 320.0, 240.0)
    p = np.array([0.4, -0.2, 6.0])
    prev = radarvi.project(k, p)
    camera_transform = radarvi.RigidTransform(np.eye(3), np.array([0.3, 0.0, 0.0]))
    curr = radarvi.project(k, camera_transform.apply(p))
    est = radarvi.triangulate_midpoint(prev, curr, k, camera_transform)
    assert np.allclose(est, p, atol=1e-9)


def test_reconstruction_underdetermined_raises():
    k = radarvi.CameraIntrinsics(460.0, 460.0, 320.0, 240.0)
    with pytest.raises(radarvi.RadarviError):
        radarvi.solve_reconstruction([((320.0, 240.0), (321.0, 241.0))], k,
                                     radarvi.RigidTransform())


def test_run_without_scene_dir_raises(tmp_path):
    with pytest.raises(radarvi.RadarviError):
        radarvi.run({"pose_source": "truth"}, tmp_path / "out", base_dir=tmp_path)


def test_end_to_end_pipeline(tmp_path):
    config_path = tmp_path / "scene.json"
    config_path.write_text(json.dumps(SCENE_CONFIG))

    manifest = radarvi.simulate(config_path, tmp_path / "scene")
    assert manifest["format"] == "radarvi-scene"
    assert manifest["frame_count"] == 4

    aggregate = radarvi.run({"scene_dir": "scene", "pose_source": "truth"}, tmp_path / "out",
                            base_dir=tmp_path, threads=2)
    assert aggregate["format"] == "radarvi-run"
    assert aggregate["frames"] == 4
    assert aggregate["mean_chamfer"] >= 0.0
    assert (tmp_path / "out" / "clouds" / "enhanced_00003.csv").exists()

    cfar_aggregate = radarvi.cfar({"scene_dir": "scene"}, tmp_path / "cfar_out",
                                  base_dir=tmp_path)
    assert cfar_aggregate["format"] == "radarvi-cfar"

    table = radarvi.report([tmp_path / "out", tmp_path / "cfar_out"], tmp_path / "rep")
    assert table["format"] == "radarvi-report"
    assert sorted(table["runs"]) == ["cfar_out", "out"]
    assert (tmp_path / "rep" / "report_table.csv").exists()
