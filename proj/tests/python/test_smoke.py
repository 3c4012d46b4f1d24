import os
import tempfile

import numpy as np
import pytest

import flare_eval as fe


def test_organ_names():
    names = fe.organ_names()
    assert len(names) == 13
    assert names[0] == "liver"
    assert "left kidney" in names


def test_dsc_nsd_basics():
    gt = np.zeros((8, 8, 8), dtype=np.uint8)
    gt[2:5, 2:5, 2:5] = 1
    assert fe.dsc(gt, gt) == 1.0
    assert fe.nsd(gt, gt, (1.0, 1.0, 1.0), 1.0) == 1.0

    empty = np.zeros_like(gt)
    assert fe.dsc(gt, empty) == 0.0
    assert fe.dsc(empty, empty) == 1.0
    assert fe.nsd(gt, empty, (1.0, 1.0, 1.0), 1.0) == 0.0
    assert fe.nsd(empty, empty, (1.0, 1.0, 1.0), 1.0) == 1.0

    shifted = np.roll(gt, 1, axis=0)
    assert 0.0 < fe.dsc(gt, shifted) < 1.0


def test_distance_field():
    m = np.zeros((5, 5, 5), dtype=np.uint8)
    m[2, 2, 2] = 1
    d = fe.distance_to_mask(m, (1.0, 1.0, 2.0))
    assert d[2, 2, 2] == 0.0
    assert d[3, 2, 2] == 1.0
    assert d[2, 2, 3] == 2.0


def test_volume_round_trip():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 14, size=(6, 7, 8)).astype(np.uint8)
    vol = fe.LabelVolume(labels, (1.0, 1.5, 2.0))
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "v.nii.gz")
        fe.write_volume(vol, path)
        back = fe.load_volume(path)
    assert back.dims == [6, 7, 8]
    assert np.array_equal(back.to_numpy(), labels)
    assert back.orientation == "RAS"
    canonical = fe.to_canonical_ras(back)
    assert np.array_equal(canonical.to_numpy(), labels)


def test_organ_volume():
    m = np.zeros((4, 4, 4), dtype=np.uint8)
    m[:2, :2, :2] = 1  # 8 voxels
    assert fe.organ_volume_cm3(m, (5.0, 5.0, 5.0)) == pytest.approx(1.0)


def test_auc():
    samples = [(t * 0.1, 3072.0, 50.0) for t in range(100)]
    assert fe.auc_gpu(samples, 10.0) == pytest.approx(10240.0)
    assert fe.auc_cpu(samples, 10.0) == pytest.approx(500.0)
    assert fe.PENALTY == (0.0, 0.0, 3600.0, 29491200.0, 360000.0)


def test_rank_leaderboard():
    values = np.zeros((3, 2, 5))
    for a in range(3):
        values[a, :, 0] = 0.9 - 0.2 * a
        values[a, :, 1] = 0.9 - 0.2 * a
        values[a, :, 2] = 10.0 * (a + 1)
        values[a, :, 3] = 100.0 * (a + 1)
        values[a, :, 4] = 100.0 * (a + 1)
    board = fe.rank_leaderboard(["a", "b", "c"], ["c0", "c1"], values)
    assert [e[1] for e in board] == ["a", "b", "c"]
    assert board[0][0] == 1.0 and board[0][2] == 1.0


def test_stats():
    assert fe.kendall_tau([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0
    assert fe.kendall_tau([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0

    b = list(range(1, 11))
    a = [x + 2.0 for x in b]
    stat, p = fe.wilcoxon_signed_rank(a, b)
    assert stat == 55.0
    assert p == pytest.approx(2.0 / 1024.0)


def test_bootstrap_deterministic():
    values = np.zeros((3, 6, 5))
    rng = np.random.default_rng(1)
    for a in range(3):
        lvl = 1.0 - 0.2 * a
        values[a, :, 0] = lvl - rng.uniform(0, 0.01, 6)
        values[a, :, 1] = lvl - rng.uniform(0, 0.01, 6)
        values[a, :, 2:] = 10.0 * (a + 1)
    algos = ["a", "b", "c"]
    cases = [f"c{i}" for i in range(6)]
    r1 = fe.bootstrap_rankings(algos, cases, values, n_boot=50, seed=7)
    r2 = fe.bootstrap_rankings(algos, cases, values, n_boot=50, seed=7)
    assert r1["tau_overall"] == r2["tau_overall"]
    assert r1["rank_samples"] == r2["rank_samples"]
    assert all(r == 1.0 for r in r1["rank_samples"]["a"])
