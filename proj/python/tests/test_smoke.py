import json
import math

import numpy as np
import pytest

import kinnet


def small_dataset(seed=4):
    c = kinnet.DatasetConfig()
    c.characters = 3
    c.motions = 6
    c.seed = seed
    c.train_frames = 70
    c.test_frames = 30
    c.pairs_per_scenario = 1
    return kinnet.generate_dataset(c)


def test_quaternion_matrix_matches_rodrigues():
    axis = np.array([1.0, 2.0, -0.5])
    q = kinnet.axis_angle_quat(axis, 40.0)
    r = kinnet.quat_to_rotmat(q)
    # Printed matrix convention: the quaternion for +40 degrees turns by -40.
    k = axis / np.linalg.norm(axis)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    t = math.radians(-40.0)
    expected = np.eye(3) + math.sin(t) * kx + (1 - math.cos(t)) * kx @ kx
    assert np.allclose(r, expected, atol=1e-12)
    assert np.allclose(kinnet.quat_to_rotmat(kinnet.quat_from_rotmat(r)), r, atol=1e-12)


def test_twist_of_pure_y_rotation():
    q = kinnet.axis_angle_quat([0.0, 1.0, 0.0], 25.0)
    assert abs(abs(kinnet.twist_angle_y(q)) - 25.0) < 1e-9


def test_bad_quaternion_shape_raises():
    with pytest.raises(kinnet.Error):
        kinnet.quat_to_rotmat(np.zeros(3))


def test_fk_identity_is_tpose_with_bone_lengths():
    ds = small_dataset()
    sk = ds.training_skeletons()[0]
    quats = np.tile([1.0, 0.0, 0.0, 0.0], (len(sk), 1))
    p = kinnet.fk(quats, sk)[0]
    assert p.shape == (len(sk), 3)
    assert np.allclose(p[0], 0.0)
    parents = sk.parents
    lengths = [np.linalg.norm(p[j] - p[parents[j]]) for j in range(1, len(sk))]
    assert min(lengths) >= 0.0
    assert max(lengths) < sk.height


def test_clip_json_round_trip():
    clip = small_dataset().train[0]
    back = kinnet.Clip.from_json(clip.to_json())
    assert len(back) == len(clip)
    assert np.allclose(back.world, clip.world, atol=1e-9)
    assert json.loads(clip.to_json())


def test_copy_baseline_is_exact_on_rotation_copy_truth():
    ds = small_dataset()
    pair = ds.test[0]
    pred = kinnet.copy_retarget(pair.input, pair.truth.skeleton)
    assert kinnet.mse(pred, pair.truth) < 1e-10
    assert pair.scenario in {
        "known_motion/known_character",
        "known_motion/new_character",
        "new_motion/known_character",
        "new_motion/new_character",
    }


def test_dataset_save_load(tmp_path):
    ds = small_dataset()
    kinnet.save_dataset(ds, tmp_path / "d")
    back = kinnet.load_dataset(tmp_path / "d")
    assert len(back.train) == len(ds.train)
    assert [p.id for p in back.test] == [p.id for p in ds.test]


def test_train_save_and_retarget(tmp_path):
    ds = small_dataset()
    cfg = json.loads(kinnet.default_train_config("auto"))
    cfg["model"]["hidden"] = 8
    cfg["batch"] = 2
    trainer = kinnet.Trainer(ds.train, json.dumps(cfg))
    m = trainer.train_step()
    assert math.isfinite(m["total"])
    trainer.run(3)
    assert trainer.step == 3
    trainer.save(tmp_path / "m.ckpt")
    model = kinnet.load_model(tmp_path / "m.ckpt")
    pair = ds.test[0]
    out = model.retarget(pair.input, pair.truth.skeleton)
    assert len(out) == len(pair.input)
    assert np.isfinite(out.world).all()
    assert kinnet.movement_variance(out, out.skeleton.height) >= 0.0
