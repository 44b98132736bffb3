from typing import Dict

import numpy as np

from ..errors import ParameterError
from .tensor import Tensor


class Adam:
    """Adam with bias-corrected first and second moments."""

    def __init__(self, parameters: Dict[str, Tensor], learning_rate: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        if learning_rate < 0:
            raise ParameterError('learning_rate must be non-negative')
        self.parameters = parameters
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.steps = 0
        self._m = {name: np.zeros_like(p.data) for name, p in parameters.items()}
        self._v = {name: np.zeros_like(p.data) for name, p in parameters.items()}

    def zero_grad(self) -> None:
        for param in self.parameters.values():
            param.zero_grad()

    def step(self) -> None:
        self.steps += 1
        correction1 = 1.0 - self.beta1 ** self.steps
        correction2 = 1.0 - self.beta2 ** self.steps
        for name, param in self.parameters.items():
            if param.grad is None:
                continue
            m, v = self._m[name], self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * param.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * param.grad ** 2
            param.data -= self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.epsilon)
