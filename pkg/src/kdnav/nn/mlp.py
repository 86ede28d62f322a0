"""Small fully-connected stacks with explicit reverse-mode gradients.

Everything is float64 numpy; forward passes record the activations needed for
an exact backward pass. The networks here are tiny (tens of thousands of
parameters), so plain BLAS matmuls are the right tool.
"""

from __future__ import annotations

import numpy as np


class MlpStack:
    """Dense layers with rectifier hidden activations and an identity output.

    ``widths`` gives [input, hidden..., output]. Weights are W (out, in) plus
    bias (out,), initialized uniformly at fan-in scale.
    """

    def __init__(self, widths, rng: np.random.Generator | None = None):
        self.widths = list(widths)
        self.weights = []
        self.biases = []
        rng = rng if rng is not None else np.random.default_rng(0)
        for fan_in, fan_out in zip(self.widths[:-1], self.widths[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def forward(self, x: np.ndarray):
        """Run a (B, in) batch; returns (output, cache) with cache for backward."""
        inputs = []
        pre = []
        h = np.asarray(x, dtype=np.float64)
        for k in range(self.n_layers):
            inputs.append(h)
            z = h @ self.weights[k].T + self.biases[k]
            pre.append(z)
            h = np.maximum(z, 0.0) if k < self.n_layers - 1 else z
        return h, (inputs, pre)

    def backward(self, cache, dout: np.ndarray, grads: "StackGrads"):
        """Accumulate parameter gradients for the recorded forward pass.

        Returns the gradient with respect to the stack's input.
        """
        inputs, pre = cache
        dz = dout
        for k in range(self.n_layers - 1, -1, -1):
            grads.weights[k] += dz.T @ inputs[k]
            grads.biases[k] += dz.sum(axis=0)
            dx = dz @ self.weights[k]
            if k > 0:
                dz = dx * (pre[k - 1] > 0.0)
        return dx

    def params(self):
        out = []
        for k in range(self.n_layers):
            out.append(self.weights[k])
            out.append(self.biases[k])
        return out

    def zero_grads(self) -> "StackGrads":
        return StackGrads([np.zeros_like(w) for w in self.weights],
                          [np.zeros_like(b) for b in self.biases])


class StackGrads:
    def __init__(self, weights, biases):
        self.weights = weights
        self.biases = biases

    def params(self):
        out = []
        for k in range(len(self.weights)):
            out.append(self.weights[k])
            out.append(self.biases[k])
        return out
