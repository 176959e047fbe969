import json

import numpy as np
import pytest

from anonfp.evaluate import (REPORT_COLUMNS, cross_validate, kfold_indices, stratified_folds)


def test_kfold_singletons():
    folds = kfold_indices(10, 10, seed=0)
    assert sorted(len(f) for f in folds) == [1] * 10
    assert sorted(np.concatenate(folds).tolist()) == list(range(10))


@pytest.mark.parametrize("labels", [None, np.r_[np.ones(125), np.zeros(63)]])
def test_kfold_188(labels):
    folds = kfold_indices(188, 10, seed=4, labels=labels)
    assert sorted(len(f) for f in folds) == [18] * 2 + [19] * 8
    assert sorted(np.concatenate(folds).tolist()) == list(range(188))
    again = kfold_indices(188, 10, seed=4, labels=labels)
    assert all(np.array_equal(a, b) for a, b in zip(folds, again))
    other = kfold_indices(188, 10, seed=5, labels=labels)
    assert not all(np.array_equal(a, b) for a, b in zip(folds, other))


def test_kfold_stratification_balances_classes():
    labels = np.r_[np.ones(125), np.zeros(63)].astype(int)
    for f in kfold_indices(188, 10, seed=1, labels=labels):
        assert labels[f].sum() in (12, 13)


def test_kfold_errors():
    with pytest.raises(ValueError):
        kfold_indices(5, 10)


def test_degenerate_split_is_redrawn():
    labels = np.array([1] * 9 + [0] * 3)
    events = []
    folds, _ = stratified_folds(labels, 3, seed=0, events=events)
    assert all(len(set(labels[f])) == 2 for f in folds)
    with pytest.raises(ValueError):
        # only 1 negative: no 3-fold split can give every fold both classes
        stratified_folds(np.array([1] * 9 + [0]), 3, seed=0, max_redraws=5)


def test_one_hot_labels_are_perfect():
    labels = np.array([0, 1] * 30)
    X = np.eye(2)[labels]
    report = cross_validate(X, labels, seed=0)
    assert report.mean_accuracy == 1.0
    assert report.pooled_auc == 1.0
    assert len(report.folds) == 10


def test_random_fingerprints_are_chance():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 16))
    labels = np.array([0, 1] * 100)
    report = cross_validate(X, labels, seed=0)
    assert abs(report.mean_accuracy - 0.5) <= 0.1
    assert len(report.folds) == 10


def test_report_contents(tmp_path):
    rng = np.random.default_rng(1)
    labels = np.array([0, 1] * 20)
    X = rng.normal(size=(40, 4)) + labels[:, None]
    report = cross_validate(X, labels, seed=3, config={"dataset": "toy", "r": 4, "t": 5, "d": 4})
    agg = report.aggregate()
    for name in ("accuracy", "precision", "recall", "f1", "auc"):
        assert 0.0 <= agg[name]["mean"] <= 1.0
        vals = [getattr(f, name) for f in report.folds if getattr(f, name) is not None]
        assert agg[name]["std"] == pytest.approx(np.std(vals))
    for f in report.folds:
        assert f.C in (0.1, 1.0, 10.0, 100.0)
        assert f.gamma * 4 in (1.0, 2.0, 8.0, 32.0)
        assert f.n_train + f.n_test == 40
    csv_text = report.write_csv(tmp_path / "r.csv", header="anonfp-report x").read_text()
    lines = csv_text.splitlines()
    assert lines[0] == "# anonfp-report x" and lines[1] == ",".join(REPORT_COLUMNS)
    assert len(lines) == 12 and lines[2].startswith("toy,4,5,4,")
    data = json.loads(report.write_json(tmp_path / "r.json").read_text())
    assert data["config"]["embedding"] == "transductive" and len(data["folds"]) == 10
    roc = report.write_roc_csv(tmp_path / "roc.csv").read_text().splitlines()
    assert roc[0] == "threshold,fpr,tpr" and roc[1] == "inf,0.0,0.0"


def test_undefined_metrics_render_as_marker():
    # identical fingerprints with 1 positive in 10: the SVM never predicts positive
    labels = np.tile([1] + [0] * 9, 10)
    X = np.zeros((100, 2))
    report = cross_validate(X, labels, seed=0)
    rows = report.csv_rows()
    assert all(r["precision"] == "undefined" for r in rows)
    assert report.aggregate()["precision"]["undefined_folds"] == 10
    assert report.aggregate()["precision"]["mean"] is None


def test_cross_validate_errors():
    with pytest.raises(ValueError):
        cross_validate(np.zeros((20, 2)), np.zeros(20))
    with pytest.raises(ValueError):
        cross_validate(np.zeros((20, 2)), np.zeros(19))
