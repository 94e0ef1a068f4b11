"""Adam optimizer over Parameter objects.

State (first/second moment, step count) is keyed per parameter and created
lazily, so groups unfrozen mid-training start with fresh moments and correct
bias correction.
"""
from __future__ import annotations

import numpy as np

from .exceptions import ConfigurationError
from .layers import Parameter


class Adam:
    def __init__(self, learning_rate=1e-5, beta1=0.9, beta2=0.999, epsilon=1e-8):
        if learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {learning_rate}")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ConfigurationError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
        if epsilon <= 0:
            raise ConfigurationError(f"epsilon must be > 0, got {epsilon}")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self._state: dict[int, tuple[np.ndarray, np.ndarray, int]] = {}

    def step(self, params: list[Parameter]) -> None:
        """Apply one Adam update to every parameter that has a gradient."""
        for p in params:
            if p.grad is None:
                continue
            m, v, t = self._state.get(id(p), (np.zeros_like(p.value), np.zeros_like(p.value), 0))
            t += 1
            m = self.beta1 * m + (1 - self.beta1) * p.grad
            v = self.beta2 * v + (1 - self.beta2) * p.grad * p.grad
            m_hat = m / (1 - self.beta1 ** t)
            v_hat = v / (1 - self.beta2 ** t)
            p.value -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)
            self._state[id(p)] = (m, v, t)
