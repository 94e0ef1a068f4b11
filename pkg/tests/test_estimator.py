from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone

from ember import FireClassifier, UsageError

from conftest import GREEN, RED, solid_image


def solid_batch(n_per_class, size=(32, 32)):
    X = np.stack(
        [solid_image(RED, size) for _ in range(n_per_class)]
        + [solid_image(GREEN, size) for _ in range(n_per_class)]
    ).astype(float)
    y = np.array(["fire"] * n_per_class + ["nofire"] * n_per_class)
    return X, y


class TestSklearnProtocol:
    def test_get_params_round_trip(self):
        est = FireClassifier(epochs=3, learning_rate=0.01)
        params = est.get_params()
        assert params["epochs"] == 3
        assert params["learning_rate"] == 0.01
        est.set_params(epochs=5)
        assert est.epochs == 5

    def test_clone_preserves_params(self):
        est = FireClassifier(epochs=2, hidden_units=16, random_state=9)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_unfitted_predict_raises(self):
        with pytest.raises(UsageError, match="not fitted"):
            FireClassifier().predict(np.zeros((1, 8, 8, 3)))


class TestFitPredict:
    def test_separable_solid_colors(self):
        X, y = solid_batch(8)
        est = FireClassifier(epochs=8, batch_size=8, learning_rate=1e-3, random_state=0)
        est.fit(X, y)
        assert list(est.classes_) == ["fire", "nofire"]
        assert est.positive_class_ == "fire"
        predictions = est.predict(X)
        assert (predictions == y).mean() >= 0.99
        assert est.score(X, y) >= 0.99

    def test_predict_proba_columns_align_with_classes(self):
        X, y = solid_batch(6)
        est = FireClassifier(epochs=5, batch_size=6, learning_rate=1e-3, random_state=0)
        est.fit(X, y)
        proba = est.predict_proba(X)
        assert proba.shape == (len(X), 2)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0)
        fire_col = list(est.classes_).index("fire")
        assert proba[: len(X) // 2, fire_col].mean() > proba[len(X) // 2 :, fire_col].mean()

    def test_integer_labels_use_last_class_as_positive(self):
        X, _ = solid_batch(4)
        y = np.array([1] * 4 + [0] * 4)
        est = FireClassifier(epochs=4, batch_size=4, learning_rate=1e-3, random_state=1)
        est.fit(X, y)
        assert est.positive_class_ == "1"
        assert set(est.predict(X)) <= {0, 1}

    def test_history_exposed(self):
        X, y = solid_batch(4)
        est = FireClassifier(epochs=3, batch_size=4, learning_rate=1e-3)
        est.fit(X, y)
        assert len(est.history_.entries) == 3

    def test_rejects_single_class(self):
        X, _ = solid_batch(3)
        with pytest.raises(UsageError):
            FireClassifier(epochs=1).fit(X, np.array(["fire"] * len(X)))

    def test_rejects_bad_shapes(self):
        with pytest.raises(UsageError):
            FireClassifier().fit(np.zeros((4, 8, 8)), np.array([0, 1, 0, 1]))

    def test_reproducible_given_random_state(self):
        X, y = solid_batch(4)
        a = FireClassifier(epochs=3, batch_size=4, random_state=5).fit(X, y).predict_proba(X)
        b = FireClassifier(epochs=3, batch_size=4, random_state=5).fit(X, y).predict_proba(X)
        np.testing.assert_array_equal(a, b)
