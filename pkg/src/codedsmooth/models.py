"""Small fully-connected networks on the autodiff tape."""

from dataclasses import dataclass

import numpy as np

from . import autodiff
from .autodiff import Parameter, Tensor
from .errors import ValidationError

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MLPSpec:
    widths: tuple  # (input, hidden..., output)
    activation: str = "relu"

    def __post_init__(self):
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise ValidationError(f"bad layer widths {self.widths}")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")


class MLP:
    """Plain multilayer perceptron; hidden activations, linear output layer.

    Weight init is He-style for relu and Xavier-style for tanh, drawn from
    the supplied generator (pass None for a zero-initialized shell, e.g.
    when parameters are about to be loaded from a file).
    """

    def __init__(self, spec: MLPSpec, rng=None):
        self.spec = spec
        self.weights = []
        self.biases = []
        act_gain = {"relu": 2.0, "tanh": 1.0}[spec.activation]
        for fan_in, fan_out in zip(spec.widths[:-1], spec.widths[1:]):
            if rng is None:
                w = np.zeros((fan_in, fan_out))
            else:
                w = rng.normal(0.0, np.sqrt(act_gain / fan_in), (fan_in, fan_out))
            self.weights.append(Parameter(w))
            self.biases.append(Parameter(np.zeros(fan_out)))
        self._act = autodiff.relu if spec.activation == "relu" else autodiff.tanh

    @property
    def input_dim(self) -> int:
        return self.spec.widths[0]

    @property
    def output_dim(self) -> int:
        return self.spec.widths[-1]

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def forward(self, x) -> Tensor:
        h = x if isinstance(x, Tensor) else Tensor(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = autodiff.add_bias(autodiff.matmul(h, w), b)
            if i < last:
                h = self._act(h)
        return h

    __call__ = forward

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Tape-free forward pass; numerically identical op sequence."""
        h = np.asarray(x, dtype=np.float64)
        last = len(self.weights) - 1
        act = np.tanh if self.spec.activation == "tanh" else lambda a: np.maximum(a, 0.0)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.data + b.data
            if i < last:
                h = act(h)
        return h
