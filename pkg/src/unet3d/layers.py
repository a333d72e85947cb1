"""Stateful layers wrapping the functional forward/backward passes.

A layer caches what its backward pass needs only when called with
training=True, so eval-mode forwards never write to the layer and may run
concurrently.
"""

import numpy as np

from . import functional as F


class Layer:
    """Base class: named parameters, their gradients and a training-mode cache."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _cached(self):
        if self._cache is None:
            raise RuntimeError(f"{type(self).__name__}.backward called without a training forward")
        return self._cache

    def named_parameters(self, prefix: str) -> dict[str, np.ndarray]:
        return {f"{prefix}.{name}": value for name, value in self.params.items()}

    def named_gradients(self, prefix: str) -> dict[str, np.ndarray]:
        return {f"{prefix}.{name}": value for name, value in self.grads.items()}


def he_normal(shape: tuple[int, ...], fan_in: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Conv3d(Layer):
    def __init__(self, in_channels: int, out_channels: int, kernel: int, rng: np.random.Generator):
        super().__init__()
        self.padding = kernel // 2
        fan_in = in_channels * kernel**3
        self.params["weight"] = he_normal(
            (out_channels, in_channels, kernel, kernel, kernel), fan_in, rng
        )
        self.params["bias"] = np.zeros(out_channels)

    def forward(self, x, training=False):
        if training:
            self._cache = x
        return F.conv3d_forward(x, self.params["weight"], self.params["bias"], self.padding)

    def backward(self, grad_out):
        grad_x, grad_w, grad_b = F.conv3d_backward(
            grad_out, self._cached(), self.params["weight"], self.padding
        )
        self.grads = {"weight": grad_w, "bias": grad_b}
        return grad_x


class ConvTranspose3d(Layer):
    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator):
        super().__init__()
        self.params["weight"] = he_normal((in_channels, out_channels, 2, 2, 2), in_channels, rng)
        self.params["bias"] = np.zeros(out_channels)

    def forward(self, x, training=False):
        if training:
            self._cache = x
        return F.convtranspose3d_forward(x, self.params["weight"], self.params["bias"])

    def backward(self, grad_out):
        grad_x, grad_w, grad_b = F.convtranspose3d_backward(
            grad_out, self._cached(), self.params["weight"]
        )
        self.grads = {"weight": grad_w, "bias": grad_b}
        return grad_x


class BatchNorm3d(Layer):
    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.params["gain"] = np.ones(channels)
        self.params["bias"] = np.zeros(channels)
        self.state = F.BatchNormState(channels, momentum=momentum, eps=eps)

    def forward(self, x, training=False):
        out, cache = F.batchnorm_forward(
            x, self.params["gain"], self.params["bias"], self.state, training
        )
        if training:
            self._cache = cache
        return out

    def backward(self, grad_out):
        grad_x, grad_gain, grad_bias = F.batchnorm_backward(
            grad_out, self._cached(), self.params["gain"]
        )
        self.grads = {"gain": grad_gain, "bias": grad_bias}
        return grad_x


class MaxPool3d(Layer):
    def forward(self, x, training=False):
        out, argmax = F.maxpool3d_forward(x)
        if training:
            self._cache = (argmax, x.shape)
        return out

    def backward(self, grad_out):
        argmax, shape = self._cached()
        return F.maxpool3d_backward(grad_out, argmax, shape)


class ConvBlock(Layer):
    """Two conv → batch-norm → ReLU stages at one resolution level."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int, rng: np.random.Generator):
        super().__init__()
        self.stages = {
            "conv1": Conv3d(in_channels, out_channels, kernel, rng),
            "bn1": BatchNorm3d(out_channels),
            "conv2": Conv3d(out_channels, out_channels, kernel, rng),
            "bn2": BatchNorm3d(out_channels),
        }
        self._relu_inputs: list[np.ndarray] = []

    def forward(self, x, training=False):
        relu_inputs = []
        for conv, bn in (("conv1", "bn1"), ("conv2", "bn2")):
            x = self.stages[bn].forward(self.stages[conv].forward(x, training), training)
            relu_inputs.append(x)
            x = F.relu_forward(x)
        if training:
            self._cache = relu_inputs
        return x

    def backward(self, grad_out):
        relu_inputs = self._cached()
        for (conv, bn), pre_relu in zip(
            (("conv2", "bn2"), ("conv1", "bn1")), reversed(relu_inputs), strict=True
        ):
            grad_out = F.relu_backward(grad_out, pre_relu)
            grad_out = self.stages[conv].backward(self.stages[bn].backward(grad_out))
        return grad_out

    def named_parameters(self, prefix):
        params = {}
        for name, stage in self.stages.items():
            params.update(stage.named_parameters(f"{prefix}.{name}"))
        return params

    def named_gradients(self, prefix):
        grads = {}
        for name, stage in self.stages.items():
            grads.update(stage.named_gradients(f"{prefix}.{name}"))
        return grads

    def batchnorm_states(self, prefix: str) -> dict[str, F.BatchNormState]:
        return {
            f"{prefix}.{name}": stage.state
            for name, stage in self.stages.items()
            if isinstance(stage, BatchNorm3d)
        }
