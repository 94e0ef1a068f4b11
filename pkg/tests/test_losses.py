from __future__ import annotations

import math

import numpy as np
import pytest

from ember import UsageError, binary_cross_entropy, binary_cross_entropy_gradient


class TestBinaryCrossEntropy:
    def test_maximal_uncertainty_is_ln2(self):
        assert binary_cross_entropy([0.5], [1]) == pytest.approx(math.log(2), abs=1e-12)

    def test_symmetry_under_label_flip(self):
        assert binary_cross_entropy([0.5], [0]) == pytest.approx(0.693147, abs=1e-6)
        p = [0.3, 0.8]
        flipped = [0.7, 0.2]
        assert binary_cross_entropy(p, [1, 0]) == pytest.approx(
            binary_cross_entropy(flipped, [0, 1]), abs=1e-12
        )

    def test_hand_computed_two_sample_case(self):
        # -(ln 0.9 + ln 0.9) / 2 = -ln 0.9
        expected = -math.log(0.9)
        assert binary_cross_entropy([0.9, 0.1], [1, 0]) == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(0.105361, abs=1e-6)

    def test_perfect_predictions_bounded_by_clamp(self):
        assert binary_cross_entropy([1.0, 0.0], [1, 0]) <= 1.2e-7

    def test_non_negative_on_random_inputs(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = rng.integers(1, 50)
            p = rng.uniform(0, 1, n)
            y = rng.integers(0, 2, n)
            loss = binary_cross_entropy(p, y)
            assert loss >= 0
            assert math.isfinite(loss)

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            binary_cross_entropy([0.5, 0.5], [1])

    def test_matches_per_sample_oracle(self):
        rng = np.random.default_rng(1)
        eps = 1e-7
        for _ in range(50):
            n = rng.integers(1, 30)
            p = rng.uniform(0, 1, n)
            y = rng.integers(0, 2, n)
            clamped = np.clip(p, eps, 1 - eps)
            oracle = -sum(
                yi * math.log(pi) + (1 - yi) * math.log(1 - pi) for pi, yi in zip(clamped, y)
            ) / n
            assert binary_cross_entropy(p, y) == pytest.approx(oracle, rel=1e-12)


class TestGradient:
    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(2)
        h = 1e-6
        for _ in range(100):
            n = rng.integers(1, 20)
            p = rng.uniform(0.05, 0.95, n)
            y = rng.integers(0, 2, n)
            grad = binary_cross_entropy_gradient(p, y)
            i = rng.integers(0, n)
            up, down = p.copy(), p.copy()
            up[i] += h
            down[i] -= h
            fd = (binary_cross_entropy(up, y) - binary_cross_entropy(down, y)) / (2 * h)
            assert abs(fd - grad[i]) / max(abs(fd), abs(grad[i])) < 1e-4

    def test_gradient_closed_form(self):
        p = np.array([0.25, 0.8])
        y = np.array([1, 0])
        grad = binary_cross_entropy_gradient(p, y)
        expected = (p - y) / (p * (1 - p)) / 2
        np.testing.assert_allclose(grad, expected, rtol=1e-12)
