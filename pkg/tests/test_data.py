"""Dataset structure, sparse file IO, synthetic generation, PU splits."""

import numpy as np
import pytest

from pubag.data import (
    Dataset,
    PUSplit,
    SimConfig,
    concat_datasets,
    generate_gaussian_pu,
    load_sparse,
    make_pu_split,
    realized_contamination,
    write_sparse,
)
from pubag.errors import ConfigError, DataError, SparseFormatError


def test_from_dense_round_trip():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(7, 4))
    ds = Dataset.from_dense(x)
    assert ds.n_items == 7
    assert ds.n_features == 4
    np.testing.assert_array_equal(ds.to_dense(), x)


def test_row_dense_matches_take():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(9, 5))
    ds = Dataset.from_dense(x, truth_labels=rng.choice([1, -1], size=9))
    rows = np.array([4, 1, 7])
    sub = ds.take(rows)
    np.testing.assert_array_equal(sub.to_dense(), x[rows])
    np.testing.assert_array_equal(sub.truth_labels, ds.truth_labels[rows])
    # repeated rows are allowed (bootstrap use)
    rep = ds.take(np.array([2, 2, 2]))
    np.testing.assert_array_equal(rep.to_dense(), x[[2, 2, 2]])


def test_csr_validation_rejects_garbage():
    good = dict(indptr=np.array([0, 2, 3]), indices=np.array([0, 2, 1]),
                values=np.array([1.0, 2.0, 3.0]), n_features=3)
    Dataset(**good)  # sanity: the base case is fine
    with pytest.raises(DataError):
        Dataset(**{**good, "indptr": np.array([0, 3, 2])})
    with pytest.raises(DataError):
        Dataset(**{**good, "indices": np.array([0, 0, 1])})  # not increasing in row 0
    with pytest.raises(DataError):
        Dataset(**{**good, "indices": np.array([0, 5, 1])})  # out of range
    with pytest.raises(DataError):
        Dataset(**{**good, "values": np.array([1.0, np.nan, 3.0])})
    with pytest.raises(DataError):
        Dataset(**{**good, "truth_labels": np.array([1, -1, 1])})  # wrong length


def test_sparse_file_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(6, 8))
    x[rng.random(x.shape) < 0.5] = 0.0
    labels = np.array([1, -1, 0, 1, 0, -1], dtype=np.int8)
    ds = Dataset.from_dense(x, truth_labels=labels)
    path = tmp_path / "data.txt"
    write_sparse(ds, path)
    back = load_sparse(path)
    np.testing.assert_array_equal(back.truth_labels, labels)
    # widths can shrink if the last columns are all zero; compare padded
    dense = np.zeros_like(x)
    dense[:, :back.n_features] = back.to_dense()
    np.testing.assert_allclose(dense, x, rtol=0, atol=0)


def test_load_sparse_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("+1 1:0.5 2:1.0\n-1 2:oops\n")
    with pytest.raises(SparseFormatError) as err:
        load_sparse(path)
    assert "line 2" in str(err.value)

    path.write_text("+1 3:1.0 2:2.0\n")
    with pytest.raises(SparseFormatError) as err:
        load_sparse(path)
    assert "line 1" in str(err.value)

    path.write_text("+2 1:1.0\n")
    with pytest.raises(SparseFormatError):
        load_sparse(path)

    path.write_text("# only a comment\n")
    with pytest.raises(SparseFormatError):
        load_sparse(path)


def test_load_sparse_indices_are_one_based(tmp_path):
    path = tmp_path / "one.txt"
    path.write_text("+1 1:2.5 3:1.5\n0 2:-1.0\n")
    ds = load_sparse(path)
    np.testing.assert_array_equal(ds.to_dense(), [[2.5, 0.0, 1.5], [0.0, -1.0, 0.0]])
    path.write_text("+1 0:1.0\n")
    with pytest.raises(SparseFormatError):
        load_sparse(path)


def test_all_zero_labels_mean_unlabeled(tmp_path):
    path = tmp_path / "unl.txt"
    path.write_text("0 1:1.0\n0 2:1.0\n")
    assert load_sparse(path).truth_labels is None


def test_groups_round_trip(tmp_path):
    ds = Dataset.from_dense(np.eye(3), groups=("a", "a", "b"))
    write_sparse(ds, tmp_path / "d.txt", groups_path=tmp_path / "g.txt")
    back = load_sparse(tmp_path / "d.txt", groups_path=tmp_path / "g.txt")
    assert back.groups == ("a", "a", "b")
    (tmp_path / "g.txt").write_text("a\n")
    with pytest.raises(SparseFormatError):
        load_sparse(tmp_path / "d.txt", groups_path=tmp_path / "g.txt")


def test_pusplit_validation():
    with pytest.raises(DataError):
        PUSplit(np.array([0]), np.array([0]), 2)  # overlap
    with pytest.raises(DataError):
        PUSplit(np.array([0]), np.array([5]), 2)  # out of range
    with pytest.raises(DataError):
        PUSplit(np.array([], dtype=np.int64), np.array([1]), 2)
    split = PUSplit(np.array([0]), np.array([1]), 2)
    assert split.disjoint


def test_sim_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(contamination=1.0)
    with pytest.raises(ConfigError):
        SimConfig(sigma=0.0)
    with pytest.raises(ConfigError):
        SimConfig(n_pos=0)


def test_generate_gaussian_pu_shapes_and_determinism():
    cfg = SimConfig(contamination=0.3, seed=123)
    train, split, test = generate_gaussian_pu(cfg)
    assert train.n_items == cfg.n_pos + cfg.n_unlabeled
    assert test.n_items == cfg.n_test
    assert int((test.truth_labels == 1).sum()) == cfg.n_test // 2
    assert len(split.positives) == cfg.n_pos
    # the first rows are the known positives
    np.testing.assert_array_equal(split.positives, np.arange(cfg.n_pos))
    train2, _, test2 = generate_gaussian_pu(cfg)
    np.testing.assert_array_equal(train.values, train2.values)
    np.testing.assert_array_equal(test.values, test2.values)
    train3, _, _ = generate_gaussian_pu(SimConfig(contamination=0.3, seed=124))
    assert not np.array_equal(train.values, train3.values)


def test_generated_contamination_tracks_config():
    # mean realized contamination over replicates approaches the setting
    rates = []
    for seed in range(40):
        cfg = SimConfig(contamination=0.4, n_unlabeled=50, seed=seed)
        train, split, _ = generate_gaussian_pu(cfg)
        rates.append(realized_contamination(train, split))
    # binomial(50, 0.4) mean over 40 reps: SE ~ 0.011
    assert abs(np.mean(rates) - 0.4) < 0.04


def test_class_means_separate():
    cfg = SimConfig(contamination=0.0, mean_separation=1.0, seed=7,
                    n_unlabeled=400, n_pos=400)
    train, split, _ = generate_gaussian_pu(cfg)
    pos_mean = train.to_dense()[split.positives].mean(axis=0)
    neg_mean = train.to_dense()[split.unlabeled].mean(axis=0)
    assert abs(neg_mean[0] - pos_mean[0] - 1.0) < 0.15
    np.testing.assert_allclose(neg_mean[1:], pos_mean[1:], atol=0.15)


def test_make_pu_split_hides_positives():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(30, 3))
    truth = np.concatenate([np.ones(12), -np.ones(18)]).astype(np.int8)
    ds = Dataset.from_dense(x, truth_labels=truth)
    split = make_pu_split(ds, 4, seed=0)
    assert len(split.positives) == 4
    assert np.all(ds.truth_labels[split.positives] == 1)
    assert len(split.unlabeled) == 26
    # hidden positives remain in the unlabeled pool
    assert int((ds.truth_labels[split.unlabeled] == 1).sum()) == 8
    with pytest.raises(DataError):
        make_pu_split(ds, 13, seed=0)
    with pytest.raises(DataError):
        make_pu_split(ds, 0, seed=0)
    # seeded: same seed same split, different seed different split
    np.testing.assert_array_equal(split.positives, make_pu_split(ds, 4, seed=0).positives)
    assert not np.array_equal(split.positives, make_pu_split(ds, 4, seed=1).positives)


def test_concat_datasets():
    a = Dataset.from_dense(np.ones((2, 3)), truth_labels=np.array([1, -1]))
    b = Dataset.from_dense(np.full((1, 2), 2.0), truth_labels=np.array([0]))
    c = concat_datasets(a, b)
    assert c.n_items == 3 and c.n_features == 3
    np.testing.assert_array_equal(c.to_dense(),
                                  [[1, 1, 1], [1, 1, 1], [2, 2, 0]])
    np.testing.assert_array_equal(c.truth_labels, [1, -1, 0])
