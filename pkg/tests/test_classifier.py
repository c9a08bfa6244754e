import numpy as np
import pytest

from topomap.evaluator.classifier import ClassifierSpec, class_weights, train_classifier
from synth import gaussian_blobs

FAST = ClassifierSpec(hidden_layers=(16,), epochs=30)


def _split(X, y, every=4):
    test = np.arange(len(X)) % every == 0
    return X[~test], y[~test], X[test], y[test]


def test_class_weights():
    np.testing.assert_allclose(class_weights([0, 0, 0, 1], [0, 1]), [4 / 6, 2.0])


def test_separable_clusters():
    X, y = gaussian_blobs([[0, 0], [6, 6]], 60, 0.7, seed=1)
    Xtr, ytr, Xte, yte = _split(X, y)
    clf = train_classifier(Xtr, ytr, FAST)
    assert np.mean(clf.predict(Xte) == yte) == 1.0


def test_loss_improves():
    X, y = gaussian_blobs([[0, 0], [6, 6]], 60, 0.7, seed=1)
    clf = train_classifier(X, y, FAST)
    loss = clf.history["loss"]
    assert all(later <= loss[0] for later in loss[1:])


def test_chance_level_on_shuffled_labels():
    accs = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(200, 2))
        y = rng.permutation(np.repeat([0, 1], 100))
        Xtr, ytr, Xte, yte = _split(X, y)
        clf = train_classifier(Xtr, ytr, ClassifierSpec(hidden_layers=(16,), epochs=20, seed=seed),
                               Xtr[-15:], ytr[-15:])
        accs.append(np.mean(clf.predict(Xte) == yte))
    assert 0.4 <= np.mean(accs) <= 0.6


def test_deterministic():
    X, y = gaussian_blobs([[0, 0], [2, 2], [4, 0]], 30, 1.0, seed=2)
    a = train_classifier(X, y, FAST).predict_proba(X)
    b = train_classifier(X, y, FAST).predict_proba(X)
    assert a.tobytes() == b.tobytes()


def test_early_stopping_records_validation():
    X, y = gaussian_blobs([[0, 0], [3, 3]], 40, 1.0, seed=3)
    clf = train_classifier(X[:60], y[:60], FAST, X[60:], y[60:])
    assert len(clf.history["val_loss"]) == len(clf.history["loss"])
    assert len(clf.history["loss"]) <= FAST.epochs


def test_cluster_absent_from_train_is_dropped(caplog):
    X, y = gaussian_blobs([[0, 0], [6, 6], [12, 0]], 20, 0.5, seed=4)
    train = y < 2
    clf = train_classifier(X[train], y[train], FAST, X, y)
    assert set(clf.classes.tolist()) == {0, 1}
    assert "no training rows" in caplog.text


def test_single_cluster_rejected():
    with pytest.raises(ValueError):
        train_classifier(np.zeros((4, 2)), np.zeros(4, dtype=int), FAST)
